use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("check failed: {0}")]
    Check(String),

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: roughwave::Error,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Check(_) => 3,
            CliError::Core { source, .. } => match source {
                roughwave::Error::InvalidArgument(_)
                | roughwave::Error::InvalidCoefficient { .. }
                | roughwave::Error::InvalidModel { .. }
                | roughwave::Error::GridMismatch(_)
                | roughwave::Error::DimensionMismatch { .. }
                | roughwave::Error::Unsupported(_)
                | roughwave::Error::ReceiverOutside { .. }
                | roughwave::Error::Stability { .. } => 2,
                _ => 1,
            },
            CliError::Io { .. } => 1,
        }
    }
}

/// Attaches a short description of the failing step to core and I/O errors.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T> Context<T> for roughwave::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core { context: what(), source })
    }
}

impl<T> Context<T> for std::io::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|source| CliError::Io { context: what(), source })
    }
}
