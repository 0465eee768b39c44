use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid coefficient in cell {cell}: {reason}")]
    InvalidCoefficient { cell: usize, reason: String },

    #[error("invalid model in cell {cell}: {reason}")]
    InvalidModel { cell: usize, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("stability violation: dt = {dt:e} exceeds the limit {limit:e}; use dt <= {suggested:e}")]
    Stability { dt: f64, limit: f64, suggested: f64 },

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("insufficient history: index {needed} requested, {available} states available")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("receiver {index} at {position:?} lies outside the domain")]
    ReceiverOutside { index: usize, position: Vec<f64> },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
