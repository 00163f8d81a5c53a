use thiserror::Error;

/// Errors raised by the algebra, jet and verification layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("signature mismatch: {left} generators vs {right}")]
    SignatureMismatch { left: usize, right: usize },

    #[error("singular point: {0}")]
    Singular(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("jet mismatch: {0}")]
    JetMismatch(String),

    #[error("jet order exhausted: need order >= {needed}, have {available}")]
    OrderExhausted { needed: usize, available: usize },

    #[error("index {index} out of range 0..{bound}")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("Vahlen invariant violated: {0}")]
    VahlenInvariant(String),

    #[error("sampling failed after {attempts} attempts: {reason}")]
    Sampling { attempts: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
