use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("wave index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("scene validation failed: {0}")]
    SceneInvalid(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("singular system (condition estimate {cond:.3e}): {context}")]
    SingularSystem { cond: f64, context: String },

    #[error("file format error in {path}: {reason}")]
    FileFormat { path: String, reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
