use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("malformed XML at byte offset {offset}: {message}")]
    Xml { offset: u64, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown id: {0}")]
    Lookup(String),

    #[error("proof index {index} out of range (entry has {len} proofs)")]
    ProofIndex { index: usize, len: usize },

    #[error("cyclic transclusion: {}", pages.join(" -> "))]
    TransclusionCycle { pages: Vec<String> },

    #[error("tokenization strategy mismatch: model was trained with {model}, evaluation requested {requested}")]
    StrategyMismatch { model: String, requested: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid model file: {0}")]
    ModelFormat(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
