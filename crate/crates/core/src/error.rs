use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("unsupported range: {0}")]
    UnsupportedRange(String),
    #[error("chart error: {0}")]
    Chart(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
