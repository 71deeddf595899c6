use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}: {message}")]
    ConfigLine { line: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid input mesh {path}: {source}")]
    InvalidMesh {
        path: PathBuf,
        #[source]
        source: pwillmore_core::Error,
    },

    #[error(transparent)]
    Core(#[from] pwillmore_core::Error),
}

impl CliError {
    /// Process exit status: 2 for rejected input, 3 for a failed flow step, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ConfigLine { .. } | CliError::Config(_) | CliError::InvalidMesh { .. } => 2,
            CliError::Core(pwillmore_core::Error::InvalidParameter(_)) => 2,
            CliError::Core(pwillmore_core::Error::StepFailure { .. }) => 3,
            _ => 1,
        }
    }
}
