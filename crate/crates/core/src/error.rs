use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("invalid level: {0}")]
    InvalidLevel(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("index {index} out of range for size {size}")]
    Index { index: usize, size: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("bad checkpoint format: {0}")]
    Format(String),

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("seed text is empty after cleaning")]
    EmptySeed,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable code, used in HTTP error bodies and by the C ABI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotFound(_) => "NotFound",
            Error::InvalidLevel(_) => "InvalidLevel",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Index { .. } => "IndexError",
            Error::Shape(_) => "ShapeError",
            Error::State(_) => "StateError",
            Error::Numeric(_) => "NumericError",
            Error::Format(_) => "FormatError",
            Error::CorruptCheckpoint(_) => "CorruptCheckpoint",
            Error::EmptySeed => "EmptySeed",
            Error::Io(_) => "IoError",
            Error::Json(_) => "JsonError",
            Error::Csv(_) => "CsvError",
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
