use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Scenario or parameter values violate a model assumption.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller passed arguments outside an operation's domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A recorded path failed a structural check.
    #[error("audit failure: {0}")]
    Audit(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn argument<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
