use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default qubit cap: 2^24 complex doubles take 256 MiB.
pub const DEFAULT_QUBIT_CAP: usize = 24;

/// Largest register written by [`StateVector::to_json`].
pub const JSON_QUBIT_LIMIT: usize = 10;

const NORM_TOLERANCE: f64 = 1e-10;

/// Bytes of memory needed for an `n`-qubit state vector.
pub fn state_bytes(n: usize) -> u128 {
    (1u128 << n) * 16
}

/// Check `n` against [`DEFAULT_QUBIT_CAP`].
pub fn check_qubits(n: usize) -> Result<()> {
    check_cap(n, DEFAULT_QUBIT_CAP)
}

pub(crate) fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::QubitCap { n, cap });
    }
    if n == 0 || n >= usize::BITS as usize - 1 {
        return Err(invalid(format!("unsupported qubit count {n}")));
    }
    Ok(())
}

/// Normalized amplitudes over the σ^x product basis.
///
/// Index bit `i` is qubit `i`; a clear bit is `σ^x_i = +1`. The phase of the
/// `σ^x_i = -1` basis vector is fixed so that `σ^y` acts as the real bit-flip
/// matrix `[[0, 1], [1, 0]]` (and `σ^z` as `[[0, -i], [i, 0]]`). In this
/// frame `|↑⟩_y = (|0⟩ + |1⟩)/√2` up to a discarded global phase of `e^{iπ/4}`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct StateDoc {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl StateVector {
    /// Wrap amplitudes, checking the length is a power of two and the norm is one.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(invalid(format!(
                "amplitude count {dim} is not a power of two >= 2"
            )));
        }
        let n = dim.trailing_zeros() as usize;
        let state = Self { n, amps };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(state)
    }

    /// Scale arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(invalid("cannot normalize a zero or non-finite vector"));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::from_amplitudes(amps)
    }

    /// The x-basis product state `|index⟩`.
    pub fn basis_state(n: usize, index: u64) -> Result<Self> {
        check_cap(n, DEFAULT_QUBIT_CAP)?;
        if index >> n != 0 {
            return Err(invalid(format!(
                "basis index {index} out of range for {n} qubits"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[index as usize] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub(crate) fn from_raw(n: usize, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n);
        Self { n, amps }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        super::kernels::chunked_sum(&self.amps, |a| a.norm_sqr())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Little-endian layout: `u64` amplitude count, then interleaved `re, im` doubles.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&(self.amps.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.amps.len() * 16);
        for a in &self.amps {
            buf.extend_from_slice(&a.re.to_le_bytes());
            buf.extend_from_slice(&a.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Self> {
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let len = u64::from_le_bytes(len);
        if len < 2 || !len.is_power_of_two() || len > 1 << DEFAULT_QUBIT_CAP {
            return Err(Error::Parse(format!("bad amplitude count {len}")));
        }
        let mut buf = vec![0u8; len as usize * 16];
        r.read_exact(&mut buf)?;
        let amps = buf
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        Self::from_amplitudes(amps)
    }

    /// JSON `{"n", "re", "im"}`; small registers only.
    pub fn to_json(&self) -> Result<String> {
        if self.n > JSON_QUBIT_LIMIT {
            return Err(invalid(format!(
                "JSON export is limited to {JSON_QUBIT_LIMIT} qubits (state has {})",
                self.n
            )));
        }
        let doc = StateDoc {
            n: self.n,
            re: self.amps.iter().map(|a| a.re).collect(),
            im: self.amps.iter().map(|a| a.im).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: StateDoc = serde_json::from_str(text)?;
        if doc.re.len() != 1 << doc.n || doc.im.len() != doc.re.len() {
            return Err(Error::Parse("amplitude arrays do not match n".into()));
        }
        Self::from_amplitudes(
            doc.re
                .into_iter()
                .zip(doc.im)
                .map(|(re, im)| Complex64::new(re, im))
                .collect(),
        )
    }
}

/// `|↑⟩_y^{⊗n}`: the uniform superposition in the x basis.
pub fn initial_state(n: usize) -> Result<StateVector> {
    initial_state_with_cap(n, DEFAULT_QUBIT_CAP)
}

pub fn initial_state_with_cap(n: usize, cap: usize) -> Result<StateVector> {
    check_cap(n, cap)?;
    let dim = 1usize << n;
    let a = Complex64::new((dim as f64).recip().sqrt(), 0.0);
    Ok(StateVector {
        n,
        amps: vec![a; dim],
    })
}
