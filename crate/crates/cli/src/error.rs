use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("diverged: {0}")]
    Divergence(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for invalid input, 3 for divergence, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Io { .. } | CliError::Csv(_) => 4,
        }
    }
}

impl From<debt_core::Error> for CliError {
    fn from(e: debt_core::Error) -> Self {
        match e {
            debt_core::Error::Divergence { .. } => CliError::Divergence(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
