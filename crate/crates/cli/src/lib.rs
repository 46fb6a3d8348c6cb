//! IO companion to `ctrloptim-core`: dataset file formats, config files, and
//! report writers. The binary target wires these into subcommands.

pub mod config;
pub mod idx;
pub mod report;

use std::fmt;

/// Errors from the IO layer: filesystem problems or malformed inputs, plus
/// anything bubbling up from the core.
#[derive(Debug)]
pub enum Error {
    Io(std::io::Error),
    Format(String),
    Core(ctrloptim_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Format(msg) => write!(f, "{msg}"),
            Error::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<ctrloptim_core::Error> for Error {
    fn from(e: ctrloptim_core::Error) -> Self {
        Error::Core(e)
    }
}
