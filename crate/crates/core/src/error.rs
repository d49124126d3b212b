use thiserror::Error;

/// Errors reported by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular geometry: {0}")]
    SingularGeometry(String),
    #[error("orientation undefined: {0}")]
    UndefinedOrientation(String),
    #[error("unsupported pose: {0}")]
    UnsupportedPose(String),
    #[error("kernel singularity: {0}")]
    Singularity(String),
    #[error("matrix is not Hermitian (relative residual {0:.3e})")]
    NotHermitian(f64),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
