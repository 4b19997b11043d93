use std::io;

use sparse_nmf::NmfError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Data(String),

    #[error("{0}")]
    Numerical(String),

    #[error("network error: {0}")]
    Network(String),

    #[error("checksum mismatch for {path}: expected {expected}, got {actual}")]
    ChecksumMismatch { path: String, expected: String, actual: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Data(_) | CliError::Network(_) | CliError::ChecksumMismatch { .. } => EXIT_DATA,
        }
    }
}

impl From<NmfError> for CliError {
    fn from(e: NmfError) -> Self {
        match e {
            NmfError::InvalidConfig(_)
            | NmfError::InvalidRank { .. }
            | NmfError::RankTooLarge { .. }
            | NmfError::PTooLarge { .. } => CliError::Usage(e.to_string()),
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(format!("manifest: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
