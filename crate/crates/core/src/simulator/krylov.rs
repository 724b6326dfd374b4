//! Short-iterative Lanczos propagator for `exp(-i t H) v` with a Hermitian
//! operator given only through products.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagatorOptions {
    /// Krylov dimension per substep.
    pub krylov_dim: usize,
    /// Target 2-norm error per substep.
    pub tol: f64,
    /// Upper bound on `‖H‖ · dt` for the first substep attempt.
    pub max_phase: f64,
    pub max_substeps: usize,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        Self {
            krylov_dim: 30,
            tol: 1e-12,
            max_phase: 4.0,
            max_substeps: 100_000,
        }
    }
}

fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn cnorm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(-i t H) v`; `norm_bound` must bound the spectral radius of `H`.
pub fn propagate(
    apply: &dyn Fn(&[Complex64], &mut [Complex64]),
    v: &[Complex64],
    t: f64,
    norm_bound: f64,
    opts: &PropagatorOptions,
) -> Result<Vec<Complex64>> {
    let mut psi = v.to_vec();
    if t == 0.0 {
        return Ok(psi);
    }
    let mut remaining = t.abs();
    let dir = t.signum();
    let mut dt = if norm_bound > 0.0 {
        (opts.max_phase / norm_bound).min(remaining)
    } else {
        remaining
    };
    let mut steps = 0;
    while remaining > 0.0 {
        if steps >= opts.max_substeps {
            return Err(Error::NonConvergence {
                what: "Krylov propagator",
                iterations: steps,
                residual: remaining,
            });
        }
        steps += 1;
        let h = dt.min(remaining);
        match krylov_step(apply, &psi, dir * h, opts) {
            Some(next) => {
                psi = next;
                remaining -= h;
                if remaining < 1e-15 * t.abs() {
                    remaining = 0.0;
                }
            }
            None => dt = 0.5 * h,
        }
    }
    Ok(psi)
}

/// One Krylov step; `None` when the a-posteriori error estimate exceeds `tol`.
fn krylov_step(
    apply: &dyn Fn(&[Complex64], &mut [Complex64]),
    v: &[Complex64],
    dt: f64,
    opts: &PropagatorOptions,
) -> Option<Vec<Complex64>> {
    let dim = v.len();
    let norm0 = cnorm(v);
    if norm0 == 0.0 {
        return Some(v.to_vec());
    }
    let m = opts.krylov_dim.min(dim).max(1);
    let mut basis: Vec<Vec<Complex64>> = vec![v.iter().map(|a| a / norm0).collect()];
    let mut alphas = Vec::with_capacity(m);
    let mut betas = Vec::with_capacity(m);
    let mut tail_beta = 0.0;
    for j in 0..m {
        let mut w = vec![Complex64::new(0.0, 0.0); dim];
        apply(&basis[j], &mut w);
        // real for Hermitian H
        let alpha = cdot(&basis[j], &w).re;
        for _ in 0..2 {
            for b in &basis {
                let c = cdot(b, &w);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        alphas.push(alpha);
        let beta = cnorm(&w);
        if j + 1 == m || beta < 1e-14 {
            tail_beta = if beta < 1e-14 { 0.0 } else { beta };
            break;
        }
        betas.push(beta);
        basis.push(w.iter().map(|a| a / beta).collect());
    }
    let k = alphas.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    // c = Q exp(-i dt Λ) Qᵀ e_1
    let coeffs: Vec<Complex64> = (0..k)
        .map(|row| {
            (0..k)
                .map(|e| {
                    let q = eig.eigenvectors[(row, e)] * eig.eigenvectors[(0, e)];
                    Complex64::from_polar(q, -dt * eig.eigenvalues[e])
                })
                .sum()
        })
        .collect();
    let err = tail_beta * coeffs[k - 1].norm() * norm0;
    if err > opts.tol {
        return None;
    }
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (b, c) in basis.iter().zip(&coeffs) {
        out.iter_mut()
            .zip(b)
            .for_each(|(o, bi)| *o += c * norm0 * bi);
    }
    Some(out)
}
