use thiserror::Error;

/// Errors raised by the sampler, the calculators and the oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("point lies outside the body")]
    OutsideBody,

    #[error("direction vector is zero or not unit length")]
    BadDirection,

    #[error("body has no circumradius: {0}")]
    NoCircumradius(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("log-density is not concave near s = {0}")]
    NotLogConcave(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("class parameter violation: {0}")]
    ClassViolation(String),

    #[error("numerical routine did not converge: {0}")]
    NoConvergence(String),

    #[error("expression parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
