//! Amplitude-level kernels shared by the evolution, expectation and
//! eigensolver code. Reductions use fixed-size chunks so results do not
//! depend on the thread count.

use num_complex::Complex64;
use rayon::prelude::*;

pub(crate) const CHUNK: usize = 1 << 12;

/// Deterministic parallel sum of `f` over `data`.
pub(crate) fn chunked_sum<T: Sync>(data: &[T], f: impl Fn(&T) -> f64 + Sync) -> f64 {
    if data.len() <= CHUNK {
        return data.iter().map(&f).sum();
    }
    let partials: Vec<f64> = data
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(&f).sum::<f64>())
        .collect();
    partials.iter().sum()
}

/// Deterministic parallel sum of `f(index, value)`.
pub(crate) fn chunked_sum_indexed<T: Sync>(data: &[T], f: impl Fn(usize, &T) -> f64 + Sync) -> f64 {
    if data.len() <= CHUNK {
        return data.iter().enumerate().map(|(i, v)| f(i, v)).sum();
    }
    let partials: Vec<f64> = data
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let base = c * CHUNK;
            chunk
                .iter()
                .enumerate()
                .map(|(i, v)| f(base + i, v))
                .sum::<f64>()
        })
        .collect();
    partials.iter().sum()
}

/// `amp[x] *= exp(-i gamma diag[x])`.
pub(crate) fn apply_diagonal_phase(amps: &mut [Complex64], diag: &[f64], gamma: f64) {
    let kernel = |(a, &e): (&mut Complex64, &f64)| {
        let (s, c) = (gamma * e).sin_cos();
        *a *= Complex64::new(c, -s);
    };
    if amps.len() <= CHUNK {
        amps.iter_mut().zip(diag).for_each(kernel);
    } else {
        amps.par_iter_mut()
            .zip(diag.par_iter())
            .with_min_len(CHUNK)
            .for_each(kernel);
    }
}

/// Apply the same 2×2 matrix `u` (row-major) to every qubit.
pub(crate) fn apply_uniform_single_qubit(amps: &mut [Complex64], n: usize, u: [Complex64; 4]) {
    for q in 0..n {
        apply_single_qubit(amps, q, u);
    }
}

pub(crate) fn apply_single_qubit(amps: &mut [Complex64], q: usize, u: [Complex64; 4]) {
    let half = 1usize << q;
    let block = half << 1;
    let kernel = |chunk: &mut [Complex64]| {
        let (lo, hi) = chunk.split_at_mut(half);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x0, x1) = (*a0, *a1);
            *a0 = u[0] * x0 + u[1] * x1;
            *a1 = u[2] * x0 + u[3] * x1;
        }
    };
    if amps.len() <= CHUNK {
        amps.chunks_mut(block).for_each(kernel);
    } else {
        let min_len = (CHUNK / block).max(1);
        amps.par_chunks_mut(block)
            .with_min_len(min_len)
            .for_each(kernel);
    }
}

/// `exp(-i theta X)` in the working frame, i.e. `exp(-i theta σ^y)` physically.
pub(crate) fn mixer_matrix(theta: f64) -> [Complex64; 4] {
    let (s, c) = theta.sin_cos();
    let d = Complex64::new(c, 0.0);
    let o = Complex64::new(0.0, -s);
    [d, o, o, d]
}

/// Real part of `Σ_x conj(a_x) a_{x ^ 2^q}`, i.e. `⟨X_q⟩` for a normalized state.
pub(crate) fn bit_flip_expectation(amps: &[Complex64], q: usize) -> f64 {
    let bit = 1usize << q;
    chunked_sum_indexed(amps, |x, a| (a.conj() * amps[x ^ bit]).re)
}

/// Hadamard on every qubit; maps X eigenstates onto the computational basis.
pub(crate) fn hadamard_all(amps: &mut [Complex64], n: usize) {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    apply_uniform_single_qubit(amps, n, [h, h, h, -h]);
}
