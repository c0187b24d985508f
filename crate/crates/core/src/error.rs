use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("lambda = {lambda} outside the admissible domain (-{bound}, {bound})")]
    Domain { lambda: f64, bound: f64 },

    #[error("quadrature did not reach tolerance {tol:e} within {panels} panels (error estimate {estimate:e})")]
    QuadratureFailed { tol: f64, panels: usize, estimate: f64 },

    #[error("fixed-point operator is not a contraction at kappa = {kappa} (norm bound {bound})")]
    NotContraction { kappa: f64, bound: f64 },

    #[error("dense dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("truncation estimate {estimate:e} above threshold {threshold:e}; increase n_max")]
    Truncation { estimate: f64, threshold: f64 },

    #[error("csv input: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
