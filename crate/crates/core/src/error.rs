use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("tuple enumeration of {needed} exceeds cap {cap}")]
    TupleCap { needed: u128, cap: u64 },

    #[error("matrix dimension {needed} exceeds cap {cap}")]
    MatrixCap { needed: u128, cap: u64 },

    #[error("permutation degree {degree} exceeds cap {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },

    #[error("not a permutation: {0:?}")]
    NotAPermutation(Vec<usize>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("no m <= {cap} with a_m > 1 (sequence: {})", .sequence.join(", "))]
    SearchExhausted { cap: u64, sequence: Vec<String> },
}

pub type Result<T> = std::result::Result<T, Error>;
