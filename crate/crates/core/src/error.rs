use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },

    #[error("truncation mismatch: expected N = {expected}, got N = {got}")]
    TruncationMismatch { expected: usize, got: usize },

    #[error("objects were built over different Appell systems")]
    SystemMismatch,

    #[error("singular germ: constant term {0:e} is zero")]
    SingularGerm(f64),

    #[error("point outside the domain of validity: {0}")]
    Domain(String),

    #[error("normalized exponential is singular: Laplace transform vanishes at the given point")]
    Singularity,

    #[error("non-degeneracy check failed: a component measure has support of size {support} <= N = {order}, so a nonzero polynomial of degree <= N vanishes almost everywhere")]
    Degenerate { support: usize, order: usize },

    #[error("invalid measure parameters: {0}")]
    InvalidMeasure(String),

    #[error("moment of order {order} is beyond the stored range {max}")]
    MomentOutOfRange { order: usize, max: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("polynomial of degree {degree} exceeds truncation N = {max}")]
    DegreeTooHigh { degree: usize, max: usize },

    #[error("malformed symbol germ: {0}")]
    MalformedGerm(String),

    #[error("coefficient extraction failed: relative Fourier residual {residual:e} exceeds tolerance {tolerance:e}")]
    ExtractionFailure { residual: f64, tolerance: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
