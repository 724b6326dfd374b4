use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::kernels;
use super::state::StateVector;
use crate::error::{invalid, Error, Result};
use crate::model::{energy_table, CouplingMatrix, IsingModel};

/// Per-layer QAOA angles `(γ_k, β_k)`, `k = 1..p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleSchedule {
    gammas: Vec<f64>,
    betas: Vec<f64>,
}

impl AngleSchedule {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if gammas.len() != betas.len() {
            return Err(Error::DimensionMismatch {
                expected: gammas.len(),
                got: betas.len(),
            });
        }
        if gammas.is_empty() {
            return Err(invalid("an angle schedule needs at least one layer"));
        }
        if gammas.iter().chain(&betas).any(|a| !a.is_finite()) {
            return Err(invalid("angles must be finite"));
        }
        Ok(Self { gammas, betas })
    }

    pub fn single(gamma: f64, beta: f64) -> Result<Self> {
        Self::new(vec![gamma], vec![beta])
    }

    /// Flat parameter vector `[γ_1..γ_p, β_1..β_p]`.
    pub fn from_params(params: &[f64]) -> Result<Self> {
        if !params.len().is_multiple_of(2) {
            return Err(invalid("parameter vector must have even length"));
        }
        let p = params.len() / 2;
        Self::new(params[..p].to_vec(), params[p..].to_vec())
    }

    pub fn to_params(&self) -> Vec<f64> {
        self.gammas.iter().chain(&self.betas).copied().collect()
    }

    pub fn p(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn layers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.gammas.iter().copied().zip(self.betas.iter().copied())
    }
}

/// QAOA engine for one model, with the diagonal of `H_A/J₀` precomputed.
#[derive(Clone, Debug)]
pub struct QaoaSimulator {
    model: IsingModel,
    diag: Vec<f64>,
}

impl QaoaSimulator {
    pub fn new(model: &IsingModel) -> Result<Self> {
        Self::with_cap(model, super::DEFAULT_QUBIT_CAP)
    }

    pub fn with_cap(model: &IsingModel, cap: usize) -> Result<Self> {
        super::state::check_cap(model.n(), cap)?;
        Ok(Self {
            model: model.clone(),
            diag: energy_table(model.couplings()),
        })
    }

    pub fn model(&self) -> &IsingModel {
        &self.model
    }

    /// Classical energies `E_A(x)` of every basis string.
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn evolve(&self, state: &StateVector, schedule: &AngleSchedule) -> Result<StateVector> {
        self.check(state)?;
        let mut out = state.clone();
        let b = self.model.b_over_j0();
        let mixer = self.model.mixer();
        for (gamma, beta) in schedule.layers() {
            apply_cost_layer(&mut out, &self.diag, gamma);
            apply_mixer_layer(&mut out, mixer.rotation_angle(beta, b));
        }
        Ok(out)
    }

    /// Run the schedule from `|↑⟩_y^{⊗n}`.
    pub fn prepare(&self, schedule: &AngleSchedule) -> Result<StateVector> {
        let psi0 = super::state::initial_state_with_cap(self.model.n(), usize::MAX >> 1)?;
        self.evolve(&psi0, schedule)
    }

    pub fn expectation_ha(&self, state: &StateVector) -> Result<f64> {
        self.check(state)?;
        Ok(diagonal_expectation(state, &self.diag))
    }

    pub fn expectation_h(&self, state: &StateVector) -> Result<f64> {
        Ok(self.expectation_ha(state)? + expectation_hb(state, self.model.b_over_j0()))
    }

    /// `⟨H⟩/J₀` after running `schedule` from the initial state.
    pub fn energy(&self, schedule: &AngleSchedule) -> Result<f64> {
        let state = self.prepare(schedule)?;
        self.expectation_h(&state)
    }

    fn check(&self, state: &StateVector) -> Result<()> {
        if state.n() != self.model.n() {
            return Err(Error::DimensionMismatch {
                expected: self.model.n(),
                got: state.n(),
            });
        }
        Ok(())
    }
}

/// `amp[x] *= exp(-i γ E_A(x))`.
pub fn apply_cost_layer(state: &mut StateVector, diag: &[f64], gamma: f64) {
    kernels::apply_diagonal_phase(state.amplitudes_mut(), diag, gamma);
}

/// `exp(-i θ σ^y)` on every qubit.
pub fn apply_mixer_layer(state: &mut StateVector, theta: f64) {
    let n = state.n();
    kernels::apply_uniform_single_qubit(state.amplitudes_mut(), n, kernels::mixer_matrix(theta));
}

/// Apply `schedule` to `state` under `model`.
pub fn evolve_qaoa(
    state: &StateVector,
    model: &IsingModel,
    schedule: &AngleSchedule,
) -> Result<StateVector> {
    QaoaSimulator::with_cap(model, usize::MAX >> 1)?.evolve(state, schedule)
}

pub(crate) fn diagonal_expectation(state: &StateVector, diag: &[f64]) -> f64 {
    kernels::chunked_sum_indexed(state.amplitudes(), |x, a| a.norm_sqr() * diag[x])
}

/// `⟨H_A⟩ = Σ_x |a_x|² E_A(x)`.
pub fn expectation_ha(state: &StateVector, j: &CouplingMatrix) -> Result<f64> {
    if j.n() != state.n() {
        return Err(Error::DimensionMismatch {
            expected: j.n(),
            got: state.n(),
        });
    }
    Ok(diagonal_expectation(state, &energy_table(j)))
}

/// `⟨σ^y_q⟩` for every qubit.
pub fn magnetization_y(state: &StateVector) -> Vec<f64> {
    (0..state.n())
        .map(|q| kernels::bit_flip_expectation(state.amplitudes(), q))
        .collect()
}

/// `⟨H_B⟩/J₀ = (B/J₀) Σ_i ⟨σ^y_i⟩`.
pub fn expectation_hb(state: &StateVector, b_over_j0: f64) -> f64 {
    if b_over_j0 == 0.0 {
        return 0.0;
    }
    b_over_j0 * magnetization_y(state).iter().sum::<f64>()
}

pub fn expectation_h(state: &StateVector, model: &IsingModel) -> Result<f64> {
    Ok(expectation_ha(state, model.couplings())? + expectation_hb(state, model.b_over_j0()))
}

/// Probabilities of the x-basis strings.
pub fn output_distribution(state: &StateVector) -> Vec<f64> {
    state.amplitudes().iter().map(|a| a.norm_sqr()).collect()
}

/// Probabilities of y-basis outcomes, same bit labelling (clear bit = `σ^y = +1`).
pub fn y_basis_distribution(state: &StateVector) -> Vec<f64> {
    let mut amps: Vec<Complex64> = state.amplitudes().to_vec();
    kernels::hadamard_all(&mut amps, state.n());
    amps.iter().map(|a| a.norm_sqr()).collect()
}
