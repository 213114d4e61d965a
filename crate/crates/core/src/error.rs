use thiserror::Error;

/// Errors raised across the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("rank-deficient generator: rank {rank} < {k}")]
    RankDeficient { rank: usize, k: usize },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid field parameters: {0}")]
    InvalidField(String),

    #[error("no BCH code of length {length} and dimension {k}; achievable dimensions: {achievable:?}")]
    NoSuchCode {
        length: usize,
        k: usize,
        achievable: Vec<usize>,
    },

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("invalid order: {0}")]
    InvalidOrder(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("search failed: {0}")]
    Search(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
