use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid bandwidth: {0}")]
    InvalidBandwidth(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("objective not finite at {0}")]
    NonFiniteObjective(String),

    #[error("matrix singular beyond ridge tolerance")]
    SingularMatrix,

    #[error("non-finite value in input data")]
    NonFiniteData,
}

pub type Result<T> = std::result::Result<T, Error>;
