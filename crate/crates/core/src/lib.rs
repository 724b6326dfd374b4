//! Exact simulation and angle optimization of the Quantum Approximate
//! Optimization Algorithm on the long-range transverse-field Ising model
//! realised with trapped-ion chains.
//!
//! Modules:
//! - [`model`]: couplings, the Ising Hamiltonian and its classical energies
//! - [`ionphysics`]: ion-chain normal modes and mode-mediated couplings
//! - [`simulator`]: state-vector evolution, observables, Lanczos, entropy
//! - [`analytic`]: closed-form depth-1 energy and the random-angle scale
//! - [`optimize`]: grid search, gradient descent, simplex search, bootstrap
//! - [`noise`]: bit-flip, detection, drift and light-shift error model
//! - [`metrics`]: performance η, TVD, KL divergence, Hamming bubbles

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod ionphysics;
pub mod metrics;
pub mod model;
pub mod noise;
pub mod optimize;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
