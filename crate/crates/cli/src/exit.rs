//! Error type carrying the process exit code.

use std::fmt;

pub const USAGE: u8 = 1;
pub const IO: u8 = 2;
pub const NUMERIC: u8 = 3;
pub const ADVISOR: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: USAGE,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError {
            code: IO,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Usage for bad arguments and shapes, I/O for files, advisor for backend
/// failures, numeric for everything the factorization itself rejects.
pub fn code_of(e: &cardiosep::Error) -> u8 {
    use cardiosep::Error as E;
    match e {
        E::Shape(_) | E::InvalidArgument(_) => USAGE,
        E::Io { .. } | E::Format { .. } => IO,
        E::Advisor(_) => ADVISOR,
        E::NegativeEntry { .. } | E::NonFinite(_) | E::ZeroDenominator(_) | E::Degenerate(_) => NUMERIC,
    }
}

impl From<cardiosep::Error> for CliError {
    fn from(e: cardiosep::Error) -> Self {
        CliError {
            code: code_of(&e),
            message: e.to_string(),
        }
    }
}

impl From<cardiosep::advisor::AdvisorError> for CliError {
    fn from(e: cardiosep::advisor::AdvisorError) -> Self {
        CliError {
            code: ADVISOR,
            message: format!("advisor: {e}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches the path to an I/O failure.
pub fn io_err(path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::io(format!("{}: {e}", path.display()))
}
