//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numerical failure: {message} (last estimate {estimate:e})")]
    Numerical { message: String, estimate: f64 },
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn numerical(message: impl Into<String>, estimate: f64) -> Self {
        Error::Numerical {
            message: message.into(),
            estimate,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
