use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {lhs:?} vs {rhs:?}")]
    DimensionMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("matrix is not positive definite (pivot {pivot} at column {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is singular (zero pivot at column {index})")]
    Singular { index: usize },
    #[error("rank-deficient factorization at column {index}")]
    Degenerate { index: usize },
    #[error("scan length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
