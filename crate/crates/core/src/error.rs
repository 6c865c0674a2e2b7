use thiserror::Error;

/// Errors shared by every analysis module.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An iterative routine failed to converge or produced a value far
    /// outside its mathematically admissible range.
    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// Exact enumeration would exceed the configured support cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A quantity is outside the domain where the requested theorem applies.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
