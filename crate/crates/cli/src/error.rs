use std::process::ExitCode;

use thiserror::Error;
use varcpd_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        })
    }

    /// Config problems, one per line.
    pub fn config_list(problems: &[String]) -> Self {
        CliError::Config(
            problems
                .iter()
                .map(|p| format!("\n  - {p}"))
                .collect::<String>(),
        )
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        if e.is_numerical() {
            return CliError::Numerical(msg);
        }
        match e {
            CoreError::RetryBudgetExhausted(_) => CliError::Numerical(msg),
            CoreError::InvalidConfig(_) | CoreError::InvalidModel(_) | CoreError::NonStationary { .. } => {
                CliError::Config(msg)
            }
            _ => CliError::Data(msg),
        }
    }
}

/// Wrap an I/O error on `path` as a data error.
pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}
