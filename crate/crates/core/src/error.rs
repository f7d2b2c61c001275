use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent configuration (dimensions, ranges, permutations).
    #[error("configuration error: {0}")]
    Config(String),
    /// A domain object failed one of its invariants.
    #[error("validation error: {0}")]
    Validation(String),
    /// An operation was called outside its precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("schema error: {0}")]
    Schema(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
