use std::process::ExitCode;

use thiserror::Error;

/// Command failures, each mapped to a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flag combination or flag value (exit 1).
    #[error("usage: {0}")]
    Usage(String),

    /// Unreadable, malformed or out-of-range input (exit 2).
    #[error("{0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] ldp_chisq::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Usage(_) => ExitCode::from(1),
            _ => ExitCode::from(2),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

pub fn data<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Data(msg.into()))
}
