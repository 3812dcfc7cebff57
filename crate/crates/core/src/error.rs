use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("node index {index} out of range for instance of size {n}")]
    Index { index: usize, n: usize },

    #[error("instance size {n} outside supported range {min}..={max}")]
    Size { n: usize, min: usize, max: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid solution: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidSolution(Vec<crate::ring::Violation>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag, used by the CLI error object.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter { .. } => "parameter",
            Error::Index { .. } => "index",
            Error::Size { .. } => "size",
            Error::Unsupported(_) => "unsupported",
            Error::InvalidSolution(_) => "invalid_solution",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
            Error::Csv(_) => "csv",
        }
    }
}
