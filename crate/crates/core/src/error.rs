use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the documented domain of an operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Matrix/vector shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A numerical routine failed (factorization, eigen-solve, starvation).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Configuration file or override is malformed or violates an invariant.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization failure: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
