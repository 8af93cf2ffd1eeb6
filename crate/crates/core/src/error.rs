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
    #[error("malformed stream header at byte {offset}: {reason}")]
    Header { offset: usize, reason: String },
    #[error("stream truncated inside frame {frame}")]
    Truncated { frame: usize },
    #[error("unsupported format: {0}")]
    Unsupported(String),
    #[error("no frames in input")]
    NoFrames,
    #[error("plane {width}x{height} is smaller than the {block}x{block} block")]
    TooSmall {
        width: usize,
        height: usize,
        block: usize,
    },
    #[error("invalid resampling direction: {0}")]
    InvalidDirection(String),
    #[error("need at least {min} frames, got {got}")]
    TooFewFrames { min: usize, got: usize },
    #[error("geometry mismatch: {0}")]
    Geometry(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate distribution (zero variance)")]
    Degenerate,
    #[error("too few samples: need {min}, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("correlation undefined: {0}")]
    Undefined(String),
    #[error("model format: {0}")]
    Model(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
