use thiserror::Error;

/// Failures of a command, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or invalid input: config, spec, cohort file. Exit code 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// Anything that goes wrong once computation has started. Exit code 1.
    #[error("{0}")]
    Runtime(#[from] fallbench_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::Io(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Tag an input-stage error as a configuration error.
pub(crate) fn config<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Config(format!("{context}: {e}"))
}
