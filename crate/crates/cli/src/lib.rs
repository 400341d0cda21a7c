//! Library side of the `fuzzyseg` command-line tool: image file I/O, run
//! reports, and the benchmark harness. The binary in `main.rs` is a thin
//! argument-parsing layer over these modules.

pub mod bench;
pub mod imageio;
pub mod report;

use std::fmt;

/// Errors carrying the process exit code contract: 1 usage, 2 I/O,
/// 3 numerical failure.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {}", m),
            CliError::Io(m) => write!(f, "i/o error: {}", m),
            CliError::Numerical(m) => write!(f, "numerical failure: {}", m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<fuzzyseg::Error> for CliError {
    fn from(e: fuzzyseg::Error) -> Self {
        match e {
            fuzzyseg::Error::NumericalFailure(m) => CliError::Numerical(m),
            other => CliError::Usage(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
