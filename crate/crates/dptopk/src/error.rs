use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data, reported with its 1-based line number.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A precondition on arguments or data was violated.
    #[error("{0}")]
    Domain(String),

    /// Integer arithmetic would overflow the supported range.
    #[error("integer overflow: {0}")]
    Overflow(String),

    /// An exhaustive reference computation was asked for an instance it refuses.
    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
