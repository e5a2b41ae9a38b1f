use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpError {
    #[error("matrix is not positive definite in double precision (pivot {pivot} fell below the floor)")]
    NotPositiveDefinite { pivot: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("input points {index} and {next} coincide", next = .index + 1)]
    DuplicatePoints { index: usize },

    #[error("input points are not strictly increasing at index {index}")]
    UnsortedPoints { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("data are constant; the profile likelihood is undefined")]
    DegenerateData,

    #[error("no correlation length on the search grid gives a usable correlation matrix")]
    AllInfeasible,
}

pub type Result<T> = std::result::Result<T, GpError>;
