//! CLI error wrapper with the exit-code contract.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Core(bi_core::Error),
    /// A verification command found failures (exit code 4).
    Verification(String),
}

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Core(bi_core::Error::invalid(msg))
    }

    /// 2 invalid arguments, 3 i/o, 4 verification failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(bi_core::Error::InvalidArgument(_)) => 2,
            CliError::Core(bi_core::Error::Io { .. }) => 3,
            CliError::Core(bi_core::Error::Format { .. }) => 3,
            CliError::Core(bi_core::Error::Checksum(_)) => 4,
            CliError::Core(bi_core::Error::TrainingDiverged(_)) => 4,
            CliError::Verification(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => e.fmt(f),
            CliError::Verification(msg) => write!(f, "verification failed: {msg}"),
        }
    }
}

impl From<bi_core::Error> for CliError {
    fn from(e: bi_core::Error) -> Self {
        CliError::Core(e)
    }
}
