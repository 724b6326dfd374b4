//! Matrix-free Lanczos for the extremal eigenvalues of `H/J₀`.
//!
//! In the x-product frame `H/J₀ = diag(E_A) + (B/J₀) Σ_q X_q` is a real
//! symmetric matrix, so the whole solver runs in `f64`. Off-diagonal entries
//! all share the sign of the field, which makes the ground state unique and
//! sign-definite (positive for `B < 0`, alternating for `B > 0`) and an
//! eigenvector of the global flip `Π_q X_q`. The iteration runs inside the
//! matching flip sector (half the dimension) from a start vector with the same
//! sign structure, so quasi-degenerate partners in the other sector never mix
//! into the returned vector.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernels::CHUNK;
use super::state::{check_cap, StateVector, DEFAULT_QUBIT_CAP};
use crate::error::{Error, Result};
use crate::model::{energy_table, IsingModel};
use crate::rng::{child_seed, rng_from_seed, stream};

/// Ground and highest energies of `H/J₀`.
#[derive(Clone, Debug)]
pub struct SpectrumBounds {
    pub e_gs: f64,
    pub e_max: f64,
    pub gs_vector: Option<StateVector>,
}

impl SpectrumBounds {
    pub fn new(e_gs: f64, e_max: f64) -> Result<Self> {
        if !(e_gs <= e_max) {
            return Err(Error::InvalidParameter(format!(
                "E_gs = {e_gs} exceeds E_max = {e_max}"
            )));
        }
        Ok(Self {
            e_gs,
            e_max,
            gs_vector: None,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.e_max - self.e_gs
    }
}

/// Restarted Lanczos settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LanczosOptions {
    /// Krylov vectors kept per cycle; memory is `krylov_dim · 2^n · 8` bytes.
    pub krylov_dim: usize,
    /// Restarts from the current Ritz vector after the first cycle.
    pub max_restarts: usize,
    /// Stop when `‖H v − θ v‖ ≤ tol`; this also bounds the eigenvalue error.
    pub tol: f64,
    pub seed: u64,
    pub max_qubits: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            krylov_dim: 60,
            max_restarts: 40,
            tol: 1e-9,
            seed: 0x5EED,
            max_qubits: DEFAULT_QUBIT_CAP,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LanczosResult {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub matvecs: usize,
}

/// Real symmetric operator available only through products.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// `sign · (diag(E) + field Σ_q X_q)` on the full `2^n` space.
pub struct TfimOperator<'a> {
    n: usize,
    diag: &'a [f64],
    field: f64,
    sign: f64,
}

impl<'a> TfimOperator<'a> {
    pub fn new(n: usize, diag: &'a [f64], field: f64) -> Self {
        Self {
            n,
            diag,
            field,
            sign: 1.0,
        }
    }

    pub fn negated(mut self) -> Self {
        self.sign = -self.sign;
        self
    }
}

impl SymmetricOperator for TfimOperator<'_> {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        let (field, sign, diag) = (self.field, self.sign, self.diag);
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(c, out)| {
            let base = c * CHUNK;
            for (k, yk) in out.iter_mut().enumerate() {
                let i = base + k;
                let mut flips = 0.0;
                for q in 0..n {
                    flips += x[i ^ (1 << q)];
                }
                *yk = sign * (diag[i] * x[i] + field * flips);
            }
        });
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    if a.len() <= CHUNK {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let partials: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partials.iter().sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.par_iter_mut()
        .zip(x.par_iter())
        .with_min_len(CHUNK)
        .for_each(|(yi, xi)| *yi += alpha * xi);
}

fn scale(alpha: f64, x: &mut [f64]) {
    x.par_iter_mut()
        .with_min_len(CHUNK)
        .for_each(|v| *v *= alpha);
}

/// Lowest eigenpair of a tridiagonal matrix given by its diagonal and off-diagonal.
fn tridiagonal_lowest(alphas: &[f64], betas: &[f64]) -> (f64, Vec<f64>) {
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
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
    let (idx, value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i, *v))
        .expect("non-empty tridiagonal");
    (
        value,
        eig.eigenvectors.column(idx).iter().copied().collect(),
    )
}

/// Lowest eigenpair of `op` by restarted Lanczos with full reorthogonalization.
pub fn lanczos_lowest(
    op: &dyn SymmetricOperator,
    start: Vec<f64>,
    opts: &LanczosOptions,
) -> Result<LanczosResult> {
    let dim = op.dim();
    let m = opts.krylov_dim.max(2).min(dim);
    let mut v = start;
    let mut matvecs = 0;
    let mut last_residual = f64::INFINITY;

    for _cycle in 0..=opts.max_restarts {
        let nv = dot(&v, &v).sqrt();
        scale(1.0 / nv, &mut v);

        let mut basis: Vec<Vec<f64>> = vec![v];
        let mut alphas = Vec::with_capacity(m);
        let mut betas: Vec<f64> = Vec::with_capacity(m);
        let mut restart = None;

        for j in 0..m {
            let mut w = vec![0.0; dim];
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            let alpha = dot(&basis[j], &w);
            alphas.push(alpha);
            axpy(-alpha, &basis[j], &mut w);
            if j > 0 {
                axpy(-betas[j - 1], &basis[j - 1], &mut w);
            }
            // Gram-Schmidt against the whole basis, repeated once if the
            // vector shrank enough to have lost orthogonality
            let mut norm = dot(&w, &w).sqrt();
            for _ in 0..2 {
                let coeffs: Vec<f64> = basis.iter().map(|b| dot(b, &w)).collect();
                for (b, c) in basis.iter().zip(coeffs) {
                    axpy(-c, b, &mut w);
                }
                let after = dot(&w, &w).sqrt();
                let shrank = after < 0.7 * norm;
                norm = after;
                if !shrank {
                    break;
                }
            }
            let beta = norm;
            let at_end = j + 1 == m;
            let breakdown = beta <= 1e-12 * alpha.abs().max(1.0);
            if at_end || breakdown || j % 5 == 4 {
                let (theta, y) = tridiagonal_lowest(&alphas, &betas);
                let residual = if breakdown { 0.0 } else { beta * y[j].abs() };
                last_residual = residual;
                if residual <= opts.tol || breakdown || at_end {
                    let mut x = vec![0.0; dim];
                    for (b, c) in basis.iter().zip(&y) {
                        axpy(*c, b, &mut x);
                    }
                    let nx = dot(&x, &x).sqrt();
                    scale(1.0 / nx, &mut x);
                    if residual <= opts.tol || breakdown {
                        return Ok(LanczosResult {
                            value: theta,
                            vector: x,
                            residual,
                            matvecs,
                        });
                    }
                    restart = Some(x);
                    break;
                }
            }
            betas.push(beta);
            scale(1.0 / beta, &mut w);
            basis.push(w);
        }
        v = restart.expect("cycle ends with a Ritz vector");
    }
    Err(Error::NonConvergence {
        what: "Lanczos",
        iterations: matvecs,
        residual: last_residual,
    })
}

/// `sign · (diag(E) + field Σ_q X_q)` restricted to one sector of the global
/// flip `x ↦ x̄`.
///
/// Vectors are stored on the representatives with the top bit clear; the
/// partner amplitude is `v[x̄] = parity · v[x]`. The classical energies are
/// flip-symmetric, so only the lower half of the table is read.
pub struct FlipSectorOperator<'a> {
    n: usize,
    diag: &'a [f64],
    field: f64,
    parity: f64,
    sign: f64,
}

impl<'a> FlipSectorOperator<'a> {
    pub fn new(n: usize, diag: &'a [f64], field: f64, parity: f64) -> Self {
        Self {
            n,
            diag,
            field,
            parity,
            sign: 1.0,
        }
    }

    pub fn negated(mut self) -> Self {
        self.sign = -self.sign;
        self
    }

    /// Sector holding the lowest state: Perron-Frobenius fixes its sign
    /// pattern, and with it the flip parity.
    pub fn ground_parity(n: usize, field: f64) -> f64 {
        if field > 0.0 && n % 2 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    /// Expand a sector vector to a normalized full-space vector.
    pub fn expand(&self, v: &[f64]) -> Vec<f64> {
        let half = v.len();
        let mut full = vec![0.0; 2 * half];
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for (x, &a) in v.iter().enumerate() {
            full[x] = s * a;
            full[2 * half - 1 - x] = self.parity * s * a;
        }
        full
    }
}

impl SymmetricOperator for FlipSectorOperator<'_> {
    fn dim(&self) -> usize {
        self.diag.len() / 2
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let low = self.n - 1;
        let low_mask = (1usize << low) - 1;
        let (field, sign, parity, diag) = (self.field, self.sign, self.parity, self.diag);
        let kernel = |(c, out): (usize, &mut [f64])| {
            let base = c * CHUNK;
            for (k, yk) in out.iter_mut().enumerate() {
                let i = base + k;
                let mut flips = parity * x[i ^ low_mask];
                for q in 0..low {
                    flips += x[i ^ (1 << q)];
                }
                *yk = sign * (diag[i] * x[i] + field * flips);
            }
        };
        if y.len() <= CHUNK {
            y.chunks_mut(CHUNK).enumerate().for_each(kernel);
        } else {
            y.par_chunks_mut(CHUNK).enumerate().for_each(kernel);
        }
    }
}

/// Sign-structured start vector for the lowest state of `diag + field Σ X`.
fn structured_start(dim: usize, field: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..dim)
        .map(|x| {
            let mag = 1.0 + 0.5 * rng.random::<f64>();
            if field > 0.0 && x.count_ones() % 2 == 1 {
                -mag
            } else {
                mag
            }
        })
        .collect()
}

fn real_to_state(n: usize, v: &[f64]) -> StateVector {
    StateVector::from_raw(n, v.iter().map(|&a| Complex64::new(a, 0.0)).collect())
}

/// Lowest eigenpair of `sign · (diag + field Σ X)`, as a full-space vector.
fn sector_lowest(
    n: usize,
    diag: &[f64],
    field: f64,
    sign: f64,
    opts: &LanczosOptions,
    index: u64,
) -> Result<LanczosResult> {
    // effective off-diagonal sign of the operator being minimized
    let eff = sign * field;
    let parity = FlipSectorOperator::ground_parity(n, eff);
    let mut op = FlipSectorOperator::new(n, diag, field, parity);
    if sign < 0.0 {
        op = op.negated();
    }
    let start = structured_start(op.dim(), eff, child_seed(opts.seed, stream::LANCZOS, index));
    let mut res = lanczos_lowest(&op, start, opts)?;
    res.vector = op.expand(&res.vector);
    Ok(res)
}

/// `E_gs` and `E_max` of `H/J₀`.
///
/// With `B = 0` the spectrum is read off the classical energies directly and
/// the returned ground vector is the flip-symmetric combination of the first
/// minimizing string and its complement.
pub fn extremal_energies(model: &IsingModel, want_vector: bool) -> Result<SpectrumBounds> {
    extremal_energies_with(model, want_vector, &LanczosOptions::default())
}

pub fn extremal_energies_with(
    model: &IsingModel,
    want_vector: bool,
    opts: &LanczosOptions,
) -> Result<SpectrumBounds> {
    let n = model.n();
    check_cap(n, opts.max_qubits)?;
    let diag = energy_table(model.couplings());
    let b = model.b_over_j0();

    if b == 0.0 {
        let (mut imin, mut imax) = (0usize, 0usize);
        for (x, &e) in diag.iter().enumerate() {
            if e < diag[imin] {
                imin = x;
            }
            if e > diag[imax] {
                imax = x;
            }
        }
        let gs_vector = want_vector.then(|| {
            let mut amps = vec![Complex64::new(0.0, 0.0); diag.len()];
            let partner = imin ^ (diag.len() - 1);
            amps[imin] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            amps[partner] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            StateVector::from_raw(n, amps)
        });
        return Ok(SpectrumBounds {
            e_gs: diag[imin],
            e_max: diag[imax],
            gs_vector,
        });
    }

    let low = sector_lowest(n, &diag, b, 1.0, opts, 0)?;
    // highest state of H is the lowest of -H
    let high = sector_lowest(n, &diag, b, -1.0, opts, 1)?;

    Ok(SpectrumBounds {
        e_gs: low.value,
        e_max: -high.value,
        gs_vector: want_vector.then(|| real_to_state(n, &low.vector)),
    })
}

/// Lowest energy of `H/J₀` and its eigenvector, skipping the top of the
/// spectrum.
pub fn ground_state(model: &IsingModel, opts: &LanczosOptions) -> Result<(f64, StateVector)> {
    let n = model.n();
    check_cap(n, opts.max_qubits)?;
    let b = model.b_over_j0();
    if b == 0.0 {
        let bounds = extremal_energies_with(model, true, opts)?;
        return Ok((bounds.e_gs, bounds.gs_vector.expect("vector was requested")));
    }
    let diag = energy_table(model.couplings());
    let low = sector_lowest(n, &diag, b, 1.0, opts, 0)?;
    Ok((low.value, real_to_state(n, &low.vector)))
}
