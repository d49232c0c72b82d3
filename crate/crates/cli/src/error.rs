use std::process::ExitCode;

use thiserror::Error;

/// Failures mapped onto the process exit status: 1 for configuration and
/// usage problems, 2 for data and runtime problems.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(1),
            CliError::Data(_) => ExitCode::from(2),
        }
    }
}

impl From<diabolo::Error> for CliError {
    fn from(e: diabolo::Error) -> Self {
        match e {
            diabolo::Error::Config(_) | diabolo::Error::UnknownPattern(_) => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
