//! Exact state-vector QAOA engine.
//!
//! The working basis is the σ^x product basis, so the cost layer
//! `exp(-i γ H_A/J₀)` is a diagonal phase and the mixing layer is the same
//! 2×2 rotation applied to every qubit. Memory for an `n`-qubit state is
//! `16 · 2^n` bytes ([`state_bytes`]); the default cap is
//! [`DEFAULT_QUBIT_CAP`] qubits.

mod entropy;
mod evolve;
pub(crate) mod kernels;
pub mod krylov;
mod lanczos;
mod state;

pub use entropy::half_chain_entropy;
pub use evolve::{
    apply_cost_layer, apply_mixer_layer, evolve_qaoa, expectation_h, expectation_ha,
    expectation_hb, magnetization_y, output_distribution, y_basis_distribution, AngleSchedule,
    QaoaSimulator,
};
pub use lanczos::{
    extremal_energies, extremal_energies_with, ground_state, lanczos_lowest, FlipSectorOperator,
    LanczosOptions, LanczosResult, SpectrumBounds, SymmetricOperator, TfimOperator,
};
pub use state::{
    check_qubits, initial_state, initial_state_with_cap, state_bytes, StateVector,
    DEFAULT_QUBIT_CAP, JSON_QUBIT_LIMIT,
};
