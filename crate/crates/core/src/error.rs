use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("query constrains no dimension")]
    DegenerateQuery,

    #[error("all points coincide; nearest-neighbor scale is zero")]
    DegenerateScale,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{adapter} adapter does not support {operation} queries")]
    Unsupported {
        adapter: &'static str,
        operation: &'static str,
    },

    #[error("malformed layout file: {0}")]
    Format(String),

    #[error("malformed workload record {line}: {reason}")]
    Workload { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
