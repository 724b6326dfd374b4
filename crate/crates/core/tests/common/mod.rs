//! Dense reference implementations used as test oracles.
//!
//! Everything here works in the σ^z product basis with textbook Pauli
//! matrices and full matrix exponentials, so it shares no code or basis
//! conventions with the library.

#![allow(dead_code)]

use ising_qaoa::model::CouplingMatrix;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn sigma_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn sigma_y() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn sigma_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// `op` acting on qubit `q` (bit `q` of the index) of an `n`-qubit register.
pub fn on_qubit(op: &CMat, q: usize, n: usize) -> CMat {
    on_qubits(&[(q, op)], n)
}

/// Tensor product with the given single-qubit factors and identities elsewhere.
pub fn on_qubits(factors: &[(usize, &CMat)], n: usize) -> CMat {
    let mut out = CMat::identity(1, 1);
    // kron(A, B) puts A on the high bits, so build from the top qubit down
    for k in (0..n).rev() {
        let factor = match factors.iter().find(|(q, _)| *q == k) {
            Some((_, op)) => (*op).clone(),
            None => CMat::identity(2, 2),
        };
        out = out.kronecker(&factor);
    }
    out
}

/// `Σ_{i<k} J_ik σ^x_i σ^x_k`.
pub fn ising_part(j: &CouplingMatrix) -> CMat {
    let n = j.n();
    let dim = 1 << n;
    let sx = sigma_x();
    let mut h = CMat::zeros(dim, dim);
    for i in 0..n {
        for k in (i + 1)..n {
            h += on_qubits(&[(i, &sx), (k, &sx)], n) * c(j.get(i, k), 0.0);
        }
    }
    h
}

/// `Σ_i σ_i` for one Pauli matrix.
pub fn total(op: &CMat, n: usize) -> CMat {
    let dim = 1 << n;
    let mut h = CMat::zeros(dim, dim);
    for q in 0..n {
        h += on_qubit(op, q, n);
    }
    h
}

/// `exp(-i t H)` for Hermitian `H`.
pub fn expm(h: &CMat, t: f64) -> CMat {
    let eig = SymmetricEigen::new(h.clone());
    let phases = CMat::from_diagonal(&eig.eigenvalues.map(|l| c(0.0, -l * t).exp()));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// Lowest and highest eigenvalues of a Hermitian matrix.
pub fn extremes(h: &CMat) -> (f64, f64) {
    let eig = SymmetricEigen::new(h.clone());
    let lo = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let hi = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// `(|↑⟩ + i|↓⟩)/√2` on every qubit.
pub fn y_up_state(n: usize) -> CVec {
    let one = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]) / c(2f64.sqrt(), 0.0);
    let mut v = CVec::from_element(1, c(1.0, 0.0));
    for _ in 0..n {
        v = v.kronecker(&one);
    }
    v
}

pub fn expectation(h: &CMat, v: &CVec) -> f64 {
    (v.adjoint() * h * v)[(0, 0)].re
}

/// Which form the mixing layer takes in the oracle.
#[derive(Clone, Copy, Debug)]
pub enum Mixer {
    /// `exp(-i β B Σσ^y)`.
    Field,
    /// `exp(+i β Σσ^y)`.
    Unit,
}

/// State after the QAOA circuit, computed with dense exponentials.
pub fn dense_qaoa_state(
    j: &CouplingMatrix,
    b: f64,
    gammas: &[f64],
    betas: &[f64],
    mixer: Mixer,
) -> CVec {
    let n = j.n();
    let ha = ising_part(j);
    let sy = total(&sigma_y(), n);
    let mut v = y_up_state(n);
    for (&g, &be) in gammas.iter().zip(betas) {
        v = expm(&ha, g) * v;
        v = match mixer {
            Mixer::Field => expm(&(&sy * c(b, 0.0)), be) * v,
            Mixer::Unit => expm(&(&sy * c(-1.0, 0.0)), be) * v,
        };
    }
    v
}

pub fn dense_hamiltonian(j: &CouplingMatrix, b: f64) -> CMat {
    ising_part(j) + total(&sigma_y(), j.n()) * c(b, 0.0)
}

pub fn dense_qaoa_energy(
    j: &CouplingMatrix,
    b: f64,
    gammas: &[f64],
    betas: &[f64],
    mixer: Mixer,
) -> f64 {
    expectation(
        &dense_hamiltonian(j, b),
        &dense_qaoa_state(j, b, gammas, betas, mixer),
    )
}

/// Probability of each σ^x product outcome, bit `i` set meaning `σ^x_i = −1`.
pub fn x_basis_probabilities(v: &CVec, n: usize) -> Vec<f64> {
    let h = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)])
        / c(2f64.sqrt(), 0.0);
    let mut u = CMat::identity(1, 1);
    for _ in 0..n {
        u = u.kronecker(&h);
    }
    (u * v).iter().map(|a| a.norm_sqr()).collect()
}

/// Probability of each σ^y product outcome, bit `i` set meaning `σ^y_i = −1`.
pub fn y_basis_probabilities(v: &CVec, n: usize) -> Vec<f64> {
    // rows are ⟨+y| and ⟨-y|
    let r = 1.0 / 2f64.sqrt();
    let m = CMat::from_row_slice(2, 2, &[c(r, 0.0), c(0.0, -r), c(r, 0.0), c(0.0, r)]);
    let mut u = CMat::identity(1, 1);
    for _ in 0..n {
        u = u.kronecker(&m);
    }
    (u * v).iter().map(|a| a.norm_sqr()).collect()
}

/// Random symmetric non-negative couplings.
pub fn random_couplings(n: usize, rng: &mut impl Rng) -> CouplingMatrix {
    CouplingMatrix::from_fn(n, |_, _| rng.random_range(0.0..1.5)).unwrap()
}
