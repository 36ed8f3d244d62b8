//! Crate-wide error type.

/// Errors raised anywhere in the jet / geometry / operator stack.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at line {line}, column {col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("variable index {axis} out of range for dimension {dim}")]
    IndexOutOfRange { axis: usize, dim: usize },

    #[error("multi-index of degree {degree} exceeds jet order {order}")]
    OrderExceeded { degree: usize, order: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("insufficient jet order for {what}: need {needed}, have {available}")]
    InsufficientOrder {
        what: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("division by a jet with zero value")]
    DivisionByZero,

    #[error("domain error: {func} of {value}")]
    Domain { func: &'static str, value: String },

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("metric is singular at the evaluation point")]
    SingularMetric,

    #[error("metric is not positive definite at the evaluation point")]
    NotPositiveDefinite,

    #[error("embedding is degenerate at the evaluation point")]
    DegenerateEmbedding,

    #[error("inadmissible parameters: k = {k}, n = {n}, level = {l}")]
    Inadmissible { k: usize, n: usize, l: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("geometry specification error: {0}")]
    Spec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
