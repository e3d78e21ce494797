use std::path::PathBuf;

use thiserror::Error;

/// Failures of a command, each mapped to a process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    ReadConfig {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("numerical error: {0}")]
    Numerical(#[source] nh_sta::Error),
    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
    #[error("{failed} of {total} runs did not complete")]
    RunsFailed { failed: usize, total: usize },
}

impl CliError {
    /// 0 success, 1 check failure, 2 configuration error, 3 numerical error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ChecksFailed { .. } => 1,
            CliError::Config(_) | CliError::ReadConfig { .. } | CliError::Write { .. } => 2,
            CliError::Numerical(_) | CliError::RunsFailed { .. } => 3,
        }
    }
}

impl From<nh_sta::Error> for CliError {
    fn from(e: nh_sta::Error) -> Self {
        match e {
            // bad inputs rather than numerical trouble
            nh_sta::Error::InvalidParams(msg) | nh_sta::Error::InvalidGrid(msg) => CliError::Config(msg),
            other => CliError::Numerical(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
