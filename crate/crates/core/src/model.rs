//! Long-range transverse-field Ising model.
//!
//! ```text
//! H = Σ_{i<j} J_ij σ^x_i σ^x_j  +  B Σ_i σ^y_i
//!     \________ H_A ________/     \__ H_B __/
//! ```
//!
//! Couplings are kept in units of the average nearest-neighbour coupling J₀
//! once wrapped in an [`IsingModel`]; the physical J₀ is carried along as
//! metadata only. Sites are labelled `0..n`.
//!
//! Bit strings are encoded as integers: bit `i` of the index is site `i`,
//! with bit value 0 meaning spin `+1` and bit value 1 meaning spin `−1` in the
//! σ^x eigenbasis.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Absolute slack accepted on symmetry and the diagonal when building a
/// matrix from external data. The stored matrix is always exactly symmetric.
const SYMMETRY_SLACK: f64 = 1e-12;

/// Symmetric, zero-diagonal, non-negative N×N matrix of Ising couplings.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrix {
    n: usize,
    j: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CouplingMatrixDoc {
    n: usize,
    j: Vec<Vec<f64>>,
}

impl CouplingMatrix {
    /// Build from explicit rows, validating every invariant.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(invalid(format!("coupling matrix needs n >= 2, got {n}")));
        }
        let mut j = vec![0.0; n * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            j[i * n..(i + 1) * n].copy_from_slice(row);
        }
        Self::from_flat(n, j)
    }

    pub(crate) fn from_flat(n: usize, mut j: Vec<f64>) -> Result<Self> {
        if n < 2 || j.len() != n * n {
            return Err(invalid(format!(
                "bad coupling matrix shape (n = {n}, len = {})",
                j.len()
            )));
        }
        for i in 0..n {
            let d = j[i * n + i];
            if !d.is_finite() || d.abs() > SYMMETRY_SLACK {
                return Err(invalid(format!(
                    "diagonal entry J[{i}][{i}] = {d} is not zero"
                )));
            }
            j[i * n + i] = 0.0;
            for k in (i + 1)..n {
                let a = j[i * n + k];
                let b = j[k * n + i];
                if !a.is_finite() || !b.is_finite() {
                    return Err(invalid(format!("non-finite coupling at ({i}, {k})")));
                }
                if (a - b).abs() > SYMMETRY_SLACK * a.abs().max(b.abs()).max(1.0) {
                    return Err(invalid(format!(
                        "J[{i}][{k}] = {a} differs from J[{k}][{i}] = {b}"
                    )));
                }
                if a < 0.0 {
                    return Err(invalid(format!(
                        "J[{i}][{k}] = {a} is negative; only anti-ferromagnetic couplings are supported"
                    )));
                }
                j[k * n + i] = a;
            }
        }
        Ok(Self { n, j })
    }

    /// Build from a function of the pair `(i, k)` with `i < k`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("coupling matrix needs n >= 2, got {n}")));
        }
        let mut j = vec![0.0; n * n];
        for i in 0..n {
            for k in (i + 1)..n {
                let v = f(i, k);
                j[i * n + k] = v;
                j[k * n + i] = v;
            }
        }
        Self::from_flat(n, j)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.j[i * self.n + k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.j[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Multiply every entry by a non-negative factor.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(invalid(format!(
                "scale factor {factor} must be finite and >= 0"
            )));
        }
        Ok(Self {
            n: self.n,
            j: self.j.iter().map(|v| v * factor).collect(),
        })
    }

    /// Mean coupling at each separation `r = 1..n-1` (index `r - 1`).
    pub fn separation_means(&self) -> Vec<f64> {
        (1..self.n)
            .map(|r| {
                let count = self.n - r;
                (0..count).map(|i| self.get(i, i + r)).sum::<f64>() / count as f64
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = CouplingMatrixDoc {
            n: self.n,
            j: self.rows(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CouplingMatrixDoc = serde_json::from_str(text)?;
        if doc.j.len() != doc.n {
            return Err(Error::DimensionMismatch {
                expected: doc.n,
                got: doc.j.len(),
            });
        }
        Self::from_rows(&doc.j)
    }

    /// CSV with header `i,k,j` and one row per pair `i < k`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,k,j\n");
        for i in 0..self.n {
            for k in (i + 1)..self.n {
                // `{}` on f64 prints the shortest representation that parses back exactly.
                let _ = writeln!(out, "{i},{k},{}", self.get(i, k));
            }
        }
        out
    }

    /// Parse the CSV written by [`to_csv`](Self::to_csv). Missing pairs are zero;
    /// `n` is one more than the largest site index seen.
    pub fn from_csv(reader: impl Read) -> Result<Self> {
        let mut triples = Vec::new();
        let mut n = 0usize;
        for (lineno, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('i')) {
                continue;
            }
            let mut parts = line.split(',').map(str::trim);
            let parse_err = || Error::Parse(format!("line {}: expected `i,k,j`", lineno + 1));
            let i: usize = parts
                .next()
                .ok_or_else(parse_err)?
                .parse()
                .map_err(|_| parse_err())?;
            let k: usize = parts
                .next()
                .ok_or_else(parse_err)?
                .parse()
                .map_err(|_| parse_err())?;
            let v: f64 = parts
                .next()
                .ok_or_else(parse_err)?
                .parse()
                .map_err(|_| parse_err())?;
            n = n.max(i + 1).max(k + 1);
            triples.push((i, k, v));
        }
        let mut j = vec![0.0; n * n];
        for (i, k, v) in triples {
            j[i * n + k] = v;
            j[k * n + i] = v;
        }
        Self::from_flat(n, j)
    }
}

/// `J_ik = j0 / |i - k|^alpha`.
pub fn build_power_law(n: usize, j0: f64, alpha: f64) -> Result<CouplingMatrix> {
    if !(j0 > 0.0 && j0.is_finite()) || !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(invalid(format!(
            "power law needs j0 > 0 and alpha >= 0 (got {j0}, {alpha})"
        )));
    }
    CouplingMatrix::from_fn(n, |i, k| j0 / ((k - i) as f64).powf(alpha))
}

/// `J_ik = j0 / r^alpha' · exp(-beta' (r - 1))` with `r = |i - k|`.
pub fn build_compound(
    n: usize,
    j0: f64,
    alpha_prime: f64,
    beta_prime: f64,
) -> Result<CouplingMatrix> {
    if !(j0 > 0.0 && j0.is_finite()) || !alpha_prime.is_finite() || !beta_prime.is_finite() {
        return Err(invalid(format!(
            "compound law needs j0 > 0 and finite exponents (got {j0}, {alpha_prime}, {beta_prime})"
        )));
    }
    CouplingMatrix::from_fn(n, |i, k| {
        let r = (k - i) as f64;
        j0 / r.powf(alpha_prime) * (-beta_prime * (r - 1.0)).exp()
    })
}

/// Arithmetic mean of the nearest-neighbour couplings `J_{i,i+1}`.
pub fn average_nn_coupling(j: &CouplingMatrix) -> f64 {
    let n = j.n();
    (0..n - 1).map(|i| j.get(i, i + 1)).sum::<f64>() / (n - 1) as f64
}

/// A length-N configuration of x-basis spins, each `+1` or `-1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    spins: Vec<i8>,
}

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(s) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(invalid(format!("spin value {s} is not +1 or -1")));
        }
        Ok(Self { spins })
    }

    pub fn from_index(n: usize, index: u64) -> Self {
        let spins = (0..n)
            .map(|i| if (index >> i) & 1 == 0 { 1 } else { -1 })
            .collect();
        Self { spins }
    }

    pub fn to_index(&self) -> u64 {
        self.spins
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .fold(0u64, |acc, (i, _)| acc | (1 << i))
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn flipped(&self) -> Self {
        Self {
            spins: self.spins.iter().map(|s| -s).collect(),
        }
    }
}

/// `Σ_{i<k} J_ik s_i s_k`.
pub fn classical_energy(j: &CouplingMatrix, x: &SpinConfiguration) -> Result<f64> {
    if j.n() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: j.n(),
            got: x.len(),
        });
    }
    let s = x.spins();
    let mut e = 0.0;
    for i in 0..j.n() {
        for k in (i + 1)..j.n() {
            e += j.get(i, k) * f64::from(s[i] * s[k]);
        }
    }
    Ok(e)
}

/// Classical energy of every bit string, indexed as described in the module docs.
///
/// Built incrementally: setting the highest bit `h` of `x` flips spin `h` from
/// `+1` to `-1`, which changes the energy by `-2 Σ_i J_ih s_i`.
pub fn energy_table(j: &CouplingMatrix) -> Vec<f64> {
    let n = j.n();
    let dim = 1usize << n;
    let mut table = vec![0.0; dim];
    table[0] = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |k| (i, k)))
        .map(|(i, k)| j.get(i, k))
        .sum();
    for h in 0..n {
        let half = 1usize << h;
        let row = j.row(h);
        let (lo, hi) = table.split_at_mut(half);
        hi[..half].par_iter_mut().enumerate().for_each(|(x, out)| {
            let mut field = 0.0;
            for (i, &jih) in row.iter().enumerate().take(h) {
                let s = if (x >> i) & 1 == 0 { 1.0 } else { -1.0 };
                field += jih * s;
            }
            // spins above h are all +1 in x
            field += row[h + 1..].iter().sum::<f64>();
            *out = lo[x] - 2.0 * field;
        });
    }
    table
}

/// How the mixing angle β of a QAOA layer maps onto a single-qubit rotation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixerConvention {
    /// The layer is `exp(-i β (H_B / J₀))` with `H_B = B Σ σ^y`, so the angle is
    /// scaled by `B/J₀` and the layer is trivial when `B = 0`.
    #[default]
    FieldScaled,
    /// The layer is `exp(-i β H_mix)` with the unit-strength mixer
    /// `H_mix = -Σ σ^y`, independent of `B`. Equal to `FieldScaled` at `B/J₀ = -1`.
    Unit,
}

impl MixerConvention {
    /// Angle `θ` of the per-qubit rotation `exp(-i θ σ^y)` implemented by a layer with angle `beta`.
    #[inline]
    pub fn rotation_angle(self, beta: f64, b_over_j0: f64) -> f64 {
        match self {
            MixerConvention::FieldScaled => beta * b_over_j0,
            MixerConvention::Unit => -beta,
        }
    }
}

/// Ising Hamiltonian in J₀ units together with its transverse field.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingModel {
    couplings: CouplingMatrix,
    b_over_j0: f64,
    j0: f64,
    mixer: MixerConvention,
}

impl IsingModel {
    /// Wrap couplings that are already expressed in J₀ units (`j0` metadata = 1).
    pub fn new(couplings: CouplingMatrix, b_over_j0: f64) -> Result<Self> {
        if !b_over_j0.is_finite() {
            return Err(invalid(format!("B/J0 = {b_over_j0} is not finite")));
        }
        Ok(Self {
            couplings,
            b_over_j0,
            j0: 1.0,
            mixer: MixerConvention::default(),
        })
    }

    /// Normalize physical couplings by their average nearest-neighbour value,
    /// which becomes the recorded `j0`.
    pub fn from_physical(couplings: &CouplingMatrix, b_over_j0: f64) -> Result<Self> {
        let j0 = average_nn_coupling(couplings);
        if !(j0 > 0.0) {
            return Err(invalid(
                "average nearest-neighbour coupling must be positive",
            ));
        }
        let mut model = Self::new(couplings.scaled(1.0 / j0)?, b_over_j0)?;
        model.j0 = j0;
        Ok(model)
    }

    pub fn with_mixer(mut self, mixer: MixerConvention) -> Self {
        self.mixer = mixer;
        self
    }

    pub fn with_b(&self, b_over_j0: f64) -> Self {
        Self {
            b_over_j0,
            ..self.clone()
        }
    }

    pub fn n(&self) -> usize {
        self.couplings.n()
    }

    pub fn couplings(&self) -> &CouplingMatrix {
        &self.couplings
    }

    pub fn b_over_j0(&self) -> f64 {
        self.b_over_j0
    }

    /// Physical nearest-neighbour scale, reporting only.
    pub fn j0(&self) -> f64 {
        self.j0
    }

    pub fn mixer(&self) -> MixerConvention {
        self.mixer
    }
}
