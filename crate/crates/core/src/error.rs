use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed file: {0}")]
    MalformedFile(String),
    #[error("unsupported pixel format: {0}")]
    UnsupportedPixelFormat(String),
    #[error("unsupported dtype {0:?}, expected little-endian float32")]
    UnsupportedDtype(String),
    #[error("unsupported byte order in dtype {0:?}")]
    UnsupportedByteOrder(String),
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },
    #[error("image too small: {0}")]
    ImageTooSmall(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("class count mismatch: {0} vs {1}")]
    ClassCountMismatch(usize, usize),
    #[error("confusion matrix has no counted pixels")]
    EmptyMatrix,
    #[error("color jitter needs a 3-channel image")]
    GrayscaleUnsupported,
    #[error("series has zero variance")]
    DegenerateSeries,
    #[error("percent change needs a nonzero first element")]
    ZeroBaseline,
    #[error("correlation needs at least 3 distinct degrees, got {0}")]
    InsufficientDegrees(usize),
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("backend failure: {0}")]
    Backend(String),
    #[error("missing precomputed embedding {}", .0.display())]
    MissingEmbedding(PathBuf),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse grouping used for record status columns and process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Io,
    Backend,
    Config,
    Input,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn shape(expected: impl std::fmt::Debug, actual: impl std::fmt::Debug) -> Self {
        Error::ShapeMismatch {
            expected: format!("{expected:?}"),
            actual: format!("{actual:?}"),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io { .. }
            | Error::MalformedFile(_)
            | Error::UnsupportedPixelFormat(_)
            | Error::UnsupportedDtype(_)
            | Error::UnsupportedByteOrder(_) => ErrorClass::Io,
            Error::BackendUnavailable(_) | Error::Backend(_) | Error::MissingEmbedding(_) => {
                ErrorClass::Backend
            }
            Error::Config(_) => ErrorClass::Config,
            _ => ErrorClass::Input,
        }
    }

    /// Short status tag written to the records CSV.
    pub fn status(&self) -> &'static str {
        match self.class() {
            ErrorClass::Io => "io_error",
            ErrorClass::Backend => "backend_error",
            ErrorClass::Config => "config_error",
            ErrorClass::Input => "input_error",
        }
    }
}
