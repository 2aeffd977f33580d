use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the screening toolkit.
///
/// Variants are grouped so a front end can map them onto exit codes:
/// input/data problems, file-format problems and numeric failures.
#[derive(Debug, Error)]
pub enum HdmiError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("malformed binary matrix '{path}': {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HdmiError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        HdmiError::InvalidInput(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        HdmiError::Degenerate(msg.into())
    }

    /// True for errors caused by the data rather than by a numeric breakdown.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, HdmiError::Numeric(_))
    }
}

pub type Result<T> = std::result::Result<T, HdmiError>;
