use std::io;
use std::path::PathBuf;

/// Failure of a CLI command, mapped to the process exit code by [`CliError::exit_code`].
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, configuration values or input files.
    #[error("usage error: {0}")]
    Usage(String),

    /// The simulation or a diagnostic failed.
    #[error("numerical failure: {0}")]
    Numerical(#[from] shrinkflow::Error),

    /// A verification or sweep finished but did not meet its requirements.
    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("cannot serialize {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl CliError {
    /// 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
