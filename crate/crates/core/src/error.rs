use std::path::PathBuf;

/// Errors raised by the graph construction, matching and embedding stages.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("format error at `{field}`: {message}")]
    FormatField { field: String, message: String },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("image too small: {width}x{height}, need at least {min} pixels on each side")]
    TooSmall { width: usize, height: usize, min: usize },
    #[error("keypoint {index} at ({x}, {y}) lies outside the {width}x{height} label map")]
    OutOfBounds {
        index: usize,
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("empty graph: {0}")]
    EmptyGraph(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("relevant set is empty")]
    EmptyRelevantSet,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::FormatField {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
