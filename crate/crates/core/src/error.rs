use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("negative input in {0}")]
    NegativeInput(&'static str),

    #[error("instability at t = {time}: {reason}")]
    Unstable { time: f64, reason: String },

    #[error("clipped mass {clipped:e} exceeds {limit:e} of total mass")]
    ClippingExceeded { clipped: f64, limit: f64 },

    #[error("monotonicity violation {violation:e} exceeds tolerance {tolerance:e}")]
    Monotonicity { violation: f64, tolerance: f64 },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("line {line}: `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("config syntax error on line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: name.to_string(),
        reason: reason.into(),
    }
}
