use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("zero variance")]
    ZeroVariance,

    #[error("empty mask")]
    EmptyMask,

    #[error("undefined overlap")]
    UndefinedOverlap,

    #[error("empty input")]
    EmptyInput,

    #[error("no co-occurring pairs")]
    NoPairs,

    #[error("window must be odd, got {0}")]
    EvenWindow(usize),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("single-class labels")]
    SingleClass,

    #[error("column '{0}' has no observed values in the training rows")]
    FullyMissing(String),

    #[error("insufficient groups: need at least {needed}, got {got}")]
    InsufficientGroups { needed: usize, got: usize },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
