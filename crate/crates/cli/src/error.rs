use std::path::PathBuf;

use thiserror::Error;

/// Failures of a CLI run, each mapped to a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}{}: {message}", key.as_ref().map(|k| format!(", key `{k}`")).unwrap_or_default())]
    Parse {
        line: usize,
        key: Option<String>,
        message: String,
    },

    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error(transparent)]
    Numerical(circumpolar_core::Error),

    #[error("tolerance breached: {0}")]
    Tolerance(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("output error: {0}")]
    Output(circumpolar_core::Error),
}

impl CliError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// `0` success, `1` bad input, `2` numerical failure, `3` I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } => 1,
            CliError::Numerical(_) | CliError::Tolerance(_) => 2,
            CliError::Io { .. } | CliError::Output(_) => 3,
        }
    }
}

impl From<circumpolar_core::Error> for CliError {
    fn from(e: circumpolar_core::Error) -> Self {
        if e.is_io() {
            CliError::Output(e)
        } else if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::validation("parameters", e.to_string())
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.into())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
