use thiserror::Error;

/// Errors produced by the test, its tree back-end, the generators and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid train/test split: {0}")]
    Split(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("cannot fit tree: {0}")]
    Fit(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("not enough rows for cross-validation: {0}")]
    Fold(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("not enough samples: {0}")]
    SampleSize(String),

    #[error("time budget exhausted")]
    Timeout,

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
