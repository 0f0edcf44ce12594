use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the harness. Everything user-facing funnels through
/// this type so the CLI can map failures onto stable exit codes.
#[derive(Debug, Error)]
pub enum ZslError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("out-of-vocabulary token(s): {}", tokens.join(", "))]
    OutOfVocabulary { tokens: Vec<String> },

    #[error("degenerate embedding for class '{class}': zero vector")]
    DegenerateEmbedding { class: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero-norm vector in cosine distance")]
    ZeroNorm,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("bad format in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("non-finite gradient entry at ({row}, {col})")]
    NonFiniteGradient { row: usize, col: usize },

    #[error("{0}")]
    Invalid(String),
}

impl ZslError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ZslError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        ZslError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        ZslError::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, ZslError>;
