use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid line {id}: {message}")]
    InvalidLine { id: String, message: String },

    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error("empty corpus file {0}")]
    EmptyFile(PathBuf),

    #[error("invalid word {0:?}")]
    InvalidWord(String),

    #[error("reference index {index} out of range ({available} references)")]
    ReferenceOutOfRange { index: usize, available: usize },

    #[error("position {position} out of range for sequence of length {len}")]
    PositionOutOfRange { position: usize, len: usize },

    #[error("cannot decode labels: {0}")]
    Decode(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("numerical error in {context}: {message}")]
    Numerical { context: String, message: String },

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("model file error: {0}")]
    ModelFile(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid_line(id: &str, message: impl Into<String>) -> Self {
        Error::InvalidLine {
            id: id.to_string(),
            message: message.into(),
        }
    }
}
