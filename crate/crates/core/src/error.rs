use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are split along the CLI exit-code contract: input/usage problems
/// exit with 2, numerical failures (eigensolver, non-positive-definite
/// covariances, ...) exit with 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("bad file format: {0}")]
    Format(String),
}

impl Error {
    /// Process exit code for the CLI: 1 for computational failures,
    /// 2 for input/usage/format errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
