use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config could not be parsed: {0}")]
    Parse(String),

    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("{context}: {source}")]
    Compute {
        context: String,
        #[source]
        source: rpfield::Error,
    },

    #[error("i/o failure: {0}")]
    Io(String),
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 3 for compute and
    /// i/o failures. Failed verdicts exit with 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Config { .. } => 2,
            CliError::Compute { .. } | CliError::Io(_) => 3,
        }
    }
}

/// Attaches a context string to core errors.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T> Context<T> for rpfield::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|source| CliError::Compute { context: what(), source })
    }
}
