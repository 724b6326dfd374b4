use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{n} qubits exceeds the configured cap of {cap}")]
    QubitCap { n: usize, cap: usize },

    #[error("drive at {mu} Hz is within {guard} Hz of mode {mode} at {nu} Hz")]
    Resonance {
        mu: f64,
        nu: f64,
        mode: usize,
        guard: f64,
    },

    #[error(
        "transverse Hessian is not positive definite (zig-zag instability), lowest eigenvalue {0}"
    )]
    ZigZagInstability(f64),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("energy {energy} lies outside the spectrum [{e_gs}, {e_max}]")]
    InconsistentEnergy { energy: f64, e_gs: f64, e_max: f64 },

    #[error("probability vector is not normalized (sum = {0})")]
    NotNormalized(f64),

    #[error("empty sample set")]
    EmptySamples,

    #[error(
        "coupling at separation {separation} is not positive ({value}); cannot fit in log space"
    )]
    NonPositiveCoupling { separation: usize, value: f64 },

    #[error("evaluation {evaluation} failed: {source}")]
    EvaluationFailed {
        evaluation: u64,
        source: Box<Error>,
        /// Everything evaluated before the failure.
        partial: Box<crate::optimize::OptimizationTrace>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
