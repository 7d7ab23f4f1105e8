use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit codes:
/// InvalidInput -> 1, OutOfTable -> 2, TruncationTooSmall / Numerical -> 3,
/// Inconsistent / Verification -> 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Requested coefficient lies outside the stored closed forms and tables.
    /// Recoverable: callers can probe for the maximal available order.
    #[error("coefficient not tabulated: {0}")]
    OutOfTable(String),

    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A linear system that must have a unique solution did not.
    /// Signals an internal transcription or bookkeeping defect, never bad user input.
    #[error("inconsistent linear system: {0}")]
    Inconsistent(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn out_of_table(msg: impl Into<String>) -> Self {
        Error::OutOfTable(msg.into())
    }

    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) => 1,
            Error::OutOfTable(_) => 2,
            Error::TruncationTooSmall(_) | Error::Numerical(_) | Error::Io(_) => 3,
            Error::Inconsistent(_) | Error::Verification(_) => 4,
        }
    }
}
