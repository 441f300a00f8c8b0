use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("threshold {value} out of range for {mode} mode")]
    ThresholdOutOfRange { mode: &'static str, value: f64 },

    #[error("image {width}x{height} exceeds the 65535 pixel limit of the SCEV format")]
    ImageTooLarge { width: usize, height: usize },

    #[error("malformed SCEV stream: {0}")]
    MalformedStream(String),

    #[error("invalid transmission model: {0}")]
    InvalidModel(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("degenerate system: {0}")]
    DegenerateSystem(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("label {label} outside [0, {n_classes})")]
    LabelOutOfRange { label: usize, n_classes: usize },

    #[error("missing annotation: {0}")]
    MissingAnnotation(String),

    #[error("unreadable image {path}: {reason}")]
    UnreadableImage { path: PathBuf, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
