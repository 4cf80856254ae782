use swapsim_core::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    InsufficientData(String),
    #[error("{0}")]
    BoundViolated(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::InsufficientData(_) => 4,
            CliError::BoundViolated(_) => 1,
        }
    }

    pub fn io(context: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InsufficientData { .. } => CliError::InsufficientData(e.to_string()),
            SimError::InvalidRecord(_) => CliError::Io(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
