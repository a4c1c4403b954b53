use thiserror::Error;

/// Errors raised by the hierarchy, the sample solvers and the estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("CFL violation: wave speed {speed} gives Courant number {courant} > 1")]
    Stability { speed: f64, courant: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("solver failure at step {step}: {reason}")]
    SolverFailure { step: usize, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("sample {sample_id} on level {level} failed: {source}")]
    Sample {
        sample_id: u64,
        level: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
