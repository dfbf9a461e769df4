use std::process::ExitCode;

/// Failure of a CLI command, mapped to the process exit status.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("numerical blow-up at step {step} (t = {time}); partial artifacts kept")]
    BlowUp { step: usize, time: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(fsns_core::Error),
}

impl From<fsns_core::Error> for RunError {
    fn from(e: fsns_core::Error) -> Self {
        match e {
            fsns_core::Error::BlowUp { step, time, .. } => RunError::BlowUp { step, time },
            other => RunError::Core(other),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::CheckFailed(_) => 1,
            RunError::Config(_) => 2,
            RunError::BlowUp { .. } => 3,
            RunError::Io(_) | RunError::Core(_) => 4,
        }
    }
}

impl From<&RunError> for ExitCode {
    fn from(e: &RunError) -> Self {
        ExitCode::from(e.exit_code())
    }
}
