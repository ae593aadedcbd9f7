use std::fmt;
use std::process::ExitCode;

use stablegap::Error;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameters, caught before any computation.
    Validation(String),
    Computation(String),
    Io(String),
    /// One or more acceptance criteria failed.
    Acceptance(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Validation(_) => 2,
            CliError::Computation(_) | CliError::Io(_) => 3,
            CliError::Acceptance(_) => 4,
        })
    }

    pub fn validation(e: Error) -> Self {
        CliError::Validation(e.to_string())
    }

    pub fn computation(e: Error) -> Self {
        CliError::Computation(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid configuration: {m}"),
            CliError::Computation(m) => write!(f, "computation failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Acceptance(m) => write!(f, "acceptance failed: {m}"),
        }
    }
}
