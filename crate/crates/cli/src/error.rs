//! Error buckets mapped to the process exit codes: 1 for configuration
//! problems, 2 for numeric failures, 3 for I/O.

use infladiff_core::{ArithError, ClassifyError, DiffractError, InflationError, PairCorrError};
use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            CliError::Numeric(msg) => write!(f, "numeric failure: {msg}"),
            CliError::Io(msg) => write!(f, "i/o failure: {msg}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ArithError> for CliError {
    fn from(e: ArithError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<InflationError> for CliError {
    fn from(e: InflationError) -> Self {
        match e {
            InflationError::WordTooLarge { .. } => CliError::Config(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<PairCorrError> for CliError {
    fn from(e: PairCorrError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<DiffractError> for CliError {
    fn from(e: DiffractError) -> Self {
        match e {
            DiffractError::InvalidGrid(_) | DiffractError::BadProbeWindows => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
