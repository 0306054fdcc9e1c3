use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph is already inverse-augmented")]
    AlreadyAugmented,

    #[error("invalid {kind} id {id} (graph has {len})")]
    InvalidId { kind: &'static str, id: usize, len: usize },

    #[error("partial map: {0}")]
    PartialMap(String),

    #[error("unknown vocabulary `{0}`")]
    UnknownVocabulary(String),

    #[error("unknown pattern `{0}`")]
    UnknownPattern(String),

    #[error("query parse error: {0}")]
    Query(String),

    #[error("invalid pattern `{name}`: {reason}")]
    InvalidPattern { name: String, reason: String },

    #[error("relation slots must differ in injective mode (both bound to {0})")]
    NonInjective(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("weight overflow while counting `{0}`")]
    Overflow(String),

    #[error("brute force refused: {0}")]
    TooLarge(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged at step {step}: loss {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("checkpoint mismatch: {0}")]
    Checkpoint(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
