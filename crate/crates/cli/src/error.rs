use std::path::PathBuf;

use plm_core::PlmError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] PlmError),
    /// Some samples failed under `--strict`; their rows are already written.
    #[error("{failed} of {total} samples failed")]
    Numerical { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn format(path: &std::path::Path, line: u64, message: impl Into<String>) -> Self {
        CliError::Format {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }
}
