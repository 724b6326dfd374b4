use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Schema(String),

    #[error("{n} qubits exceeds the cap of {cap}")]
    Cap { n: usize, cap: usize },

    #[error("{0}")]
    NonConvergence(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(ising_qaoa::Error),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Cap { .. } => 3,
            CliError::NonConvergence(_) => 4,
            CliError::Io { .. } => 5,
            CliError::Core(e) => core_code(e),
        }
    }
}

fn core_code(e: &ising_qaoa::Error) -> u8 {
    use ising_qaoa::Error as E;
    match e {
        E::InvalidParameter(_) | E::DimensionMismatch { .. } | E::Parse(_) | E::Json(_) => 2,
        E::QubitCap { .. } => 3,
        E::NonConvergence { .. } => 4,
        E::Io(_) => 5,
        E::EvaluationFailed { source, .. } => core_code(source),
        _ => 1,
    }
}

impl From<ising_qaoa::Error> for CliError {
    fn from(e: ising_qaoa::Error) -> Self {
        match e {
            ising_qaoa::Error::QubitCap { n, cap } => CliError::Cap { n, cap },
            other => CliError::Core(other),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub(crate) fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}
