use thiserror::Error;

/// Failure of a command. The variant decides the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or invalid inputs. Exit code 2.
    #[error("{0}")]
    Input(String),
    /// Anything that went wrong while doing the work. Exit code 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

pub fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

impl From<nomiclaw_stats::StatsError> for CliError {
    fn from(e: nomiclaw_stats::StatsError) -> Self {
        match e {
            nomiclaw_stats::StatsError::InvalidInput(_) => CliError::Input(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<nomiclaw_core::themes::ThemeError> for CliError {
    fn from(e: nomiclaw_core::themes::ThemeError) -> Self {
        use nomiclaw_core::themes::ThemeError;
        match e {
            ThemeError::Io(_) => CliError::Runtime(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}
