use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] mqci_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: not a valid table file ({reason})")]
    BadTable { path: PathBuf, reason: String },
    #[error("verification failed: {0}")]
    VerifyFailed(String),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    /// 1 for a failed verification, 3 for a budget violation, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::VerifyFailed(_) => 1,
            AppError::Core(mqci_core::Error::Resource { .. }) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, AppError>;
