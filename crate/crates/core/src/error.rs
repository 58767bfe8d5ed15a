use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("invalid run: {0}")]
    InvalidRun(String),
    #[error("vector store format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },
    #[error("agent transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: usize, message: String },
    #[error("encoder error in batch {batch}: {message}")]
    Encoder { batch: usize, message: String },
    #[error("missing embedding for id {0:?}")]
    MissingEmbedding(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("zero-norm vector{}", .0.as_ref().map(|id| format!(" for {id:?}")).unwrap_or_default())]
    ZeroVector(Option<String>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }
}
