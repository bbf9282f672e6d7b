//! Front end for `cryamabe`: configuration, the solve / verify / scan / emit
//! pipeline and its plain-text artifacts.
//!
//! Exit codes: 0 success, 1 a numerical check failed, 2 usage or I/O error.

use std::path::Path;

pub mod artifacts;
pub mod commands;
pub mod config;

pub use config::{Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 1,
            CliError::Usage(_) | CliError::Io { .. } => 2,
        }
    }
}

impl From<cryamabe_core::Error> for CliError {
    fn from(e: cryamabe_core::Error) -> Self {
        CliError::Numerical(e.to_string())
    }
}
