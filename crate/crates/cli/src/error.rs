use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Malformed JSON; serde's message names the field, line and column.
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] reach_avoid_core::Error),
}

impl CliError {
    pub fn validation(field: impl Into<String>, message: impl ToString) -> Self {
        Self::Validation { field: field.into(), message: message.to_string() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 3 for bad input, 4 for an oracle size guard, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Parse { .. } | Self::Validation { .. } => 3,
            Self::Core(reach_avoid_core::Error::Config(_)) => 3,
            Self::Core(reach_avoid_core::Error::TooLarge { .. }) => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
