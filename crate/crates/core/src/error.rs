use thiserror::Error;

/// Errors raised by the capacity toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("layout error: {0}")]
    Layout(String),

    #[error("numerical validity error: {0}")]
    Validity(String),

    #[error("invalid cut: {0}")]
    InvalidCut(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    /// A construction precondition failed; `residual` is the measured violation.
    #[error("precondition violated: {what} (residual {residual:e})")]
    Precondition { what: String, residual: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
