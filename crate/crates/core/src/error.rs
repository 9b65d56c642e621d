use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid tangent vector: {0}")]
    InvalidTangent(String),

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("geodesic is not unique: {0}")]
    NonUniqueGeodesic(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("incompatible operands: {0}")]
    Mismatch(String),

    #[error("overlapping rectangles: {0}")]
    Overlap(String),
}

pub type Result<T> = std::result::Result<T, Error>;
