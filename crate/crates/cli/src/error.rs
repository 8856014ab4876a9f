use thiserror::Error;

use concentric::Error as CoreError;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) | CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    /// A core error caused by command-line parameters.
    pub fn from_params(e: CoreError) -> Self {
        match e {
            CoreError::Numerical(_) | CoreError::Inconsistent(_) => Self::Numerical(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }

    /// A core error caused by the contents of an input table.
    pub fn from_data(e: CoreError) -> Self {
        match e {
            CoreError::Numerical(_) | CoreError::Inconsistent(_) => Self::Numerical(e.to_string()),
            CoreError::Unsupported(_) => Self::Usage(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Numerical(format!("cannot serialize report: {e}"))
    }
}
