//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A malformed input row; carries the 1-based line number where known.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Input violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// A numeric routine could not produce a usable result.
    #[error("computation error: {0}")]
    Computation(String),

    /// Model fitting failed (too few rows, degenerate response, ...).
    #[error("fit error: {0}")]
    Fit(String),

    /// Bad or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),

    /// A pipeline step was invoked before the artifact it needs exists.
    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
