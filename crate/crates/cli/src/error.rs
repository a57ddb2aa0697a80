// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;
use std::process::ExitCode;

/// Failure classes with stable exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations (exit 1).
    Usage(String),
    /// Unreadable or malformed input data (exit 2).
    Data(String),
    /// Method preconditions not met by the data (exit 3).
    Precondition(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Precondition(_) => 3,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "input error: {m}"),
            CliError::Precondition(m) => write!(f, "precondition failed: {m}"),
        }
    }
}

impl From<steptransfer::Error> for CliError {
    fn from(e: steptransfer::Error) -> Self {
        use steptransfer::Error;
        match e {
            Error::Precondition(m) => CliError::Precondition(m),
            Error::InvalidArgument(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}
