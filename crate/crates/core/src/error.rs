use thiserror::Error;

/// Errors raised by the correlation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |M - M^dagger| = {deviation:.3e})")]
    NonHermitian { deviation: f64 },

    #[error("not a valid state: {0}")]
    NotAState(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("state is not pure (purity {purity:.12})")]
    NotPure { purity: f64 },

    #[error("operation requires {expected} parties, got {actual}")]
    WrongArity { expected: usize, actual: usize },

    #[error("consistency check failed: {0}")]
    ConsistencyError(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
