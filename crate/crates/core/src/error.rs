use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("geometry mismatch: {left:?} vs {right:?}")]
    GeometryMismatch {
        left: (u16, u16),
        right: (u16, u16),
    },

    #[error("frame mismatch: {0}")]
    FrameMismatch(String),

    #[error("event {index} at ({x},{y}) t={t} outside stream bounds {width}x{height}, duration {duration}")]
    OutOfBounds {
        index: usize,
        t: u64,
        x: u16,
        y: u16,
        width: u16,
        height: u16,
        duration: u64,
    },

    #[error("timestamps not monotone at event {index} ({prev} > {next})")]
    NonMonotone { index: usize, prev: u64, next: u64 },

    #[error("label count {labels} does not match event count {events}")]
    LabelCount { labels: usize, events: usize },

    #[error("{path}: {location}: {message}")]
    Parse {
        path: PathBuf,
        location: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest entry '{entry}': {message}")]
    Manifest { entry: String, message: String },

    #[error("event sets differ: {0}")]
    EventSetMismatch(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("loss became non-finite at step {step}: {detail}")]
    NonFiniteLoss { step: usize, detail: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
