use thiserror::Error;

/// Errors surfaced by model construction, validation, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An instance (or a piece of one) fails structural validation.
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// Exhaustive enumeration was refused because the search space is too large.
    #[error("search space of {size} candidates exceeds the exhaustive-search guard of {guard}")]
    SearchSpaceTooLarge { size: u128, guard: u128 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn invalid_instance(msg: impl Into<String>) -> Self {
        Error::InvalidInstance(msg.into())
    }
}
