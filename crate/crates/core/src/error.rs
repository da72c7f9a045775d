//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by path construction, expansion queries and experiment runs.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad grid, bad ensemble size, malformed δ-grid.
    #[error("configuration error: {0}")]
    Config(String),
    /// A query that falls outside the admissible domain (off-grid times,
    /// |δ| below the resolution floor, dimension mismatch).
    #[error("query error: {0}")]
    Query(String),
    /// A functional, field or coefficient set cannot supply what was asked of it.
    #[error("capability error: {0}")]
    Capability(String),
    /// Two routes that must agree did not.
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the command-line front end: configuration
    /// problems map to 2, everything else to 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) => 2,
            _ => 1,
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
