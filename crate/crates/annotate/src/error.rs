use thiserror::Error;
use wordtree_core::treebank::Violation;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("malformed request: {0}")]
    Malformed(String),
    #[error("not found: {0}")]
    NotFound(String),
    /// The request is well-formed but not allowed in the current state.
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("illegal tree: {message}")]
    IllegalTree {
        message: String,
        violations: Vec<Violation>,
    },
    #[error("storage: {0}")]
    Storage(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] wordtree_core::Error),
}

impl From<serde_json::Error> for ServiceError {
    fn from(e: serde_json::Error) -> Self {
        ServiceError::Malformed(e.to_string())
    }
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;
