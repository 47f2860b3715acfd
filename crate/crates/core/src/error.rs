use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("variable count mismatch: {left} vs {right}")]
    VarCountMismatch { left: usize, right: usize },
    #[error("variable index {index} out of range for {nvars} variables")]
    VarIndexOutOfRange { index: usize, nvars: usize },
    #[error("point length {got} does not match variable count {expected}")]
    PointLengthMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not square: {rows}x{cols}")]
    NonSquareMatrix { rows: usize, cols: usize },
    #[error("singular matrix")]
    SingularMatrix,
    #[error("invalid specification: {0}")]
    Validation(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("order-of-vanishing mismatch: {0}")]
    OrderMismatch(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("empty or zero-volume set cannot be sampled")]
    EmptySet,
}

pub type Result<T> = std::result::Result<T, Error>;
