//! Crate-wide error type.

use alloc::string::String;

/// Errors produced by loop construction, simulation, and training.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A controller definition that cannot close a loop (zero controller,
    /// degenerate denominator, loop gain of exactly -1).
    InvalidController(String),
    /// The operation needs a proper transfer function; close the loop first.
    ImproperSystem(String),
    /// A precondition on the inputs was violated.
    InvalidInput(String),
    /// A simulation or training run produced a non-finite or runaway value.
    /// `at` is the first offending sample, iteration, or epoch index.
    Diverged { at: usize, context: &'static str },
    /// A gradient entry was NaN or infinite.
    NonFinite { index: usize },
    /// Iterative root refinement did not reach tolerance.
    NoConvergence { residual: f64 },
    /// The final value theorem does not apply (unstable or oscillatory loop).
    FinalValueUndefined(String),
    /// Vector or matrix dimensions disagree.
    ShapeMismatch { expected: usize, got: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

impl core::fmt::Display for Error {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Error::InvalidController(msg) => write!(f, "invalid controller: {msg}"),
            Error::ImproperSystem(msg) => write!(f, "improper system: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::Diverged { at, context } => {
                write!(f, "divergence in {context} at index {at}")
            }
            Error::NonFinite { index } => {
                write!(f, "non-finite gradient entry at index {index}")
            }
            Error::NoConvergence { residual } => {
                write!(
                    f,
                    "root refinement did not converge (best residual {residual:e})"
                )
            }
            Error::FinalValueUndefined(msg) => write!(f, "final value undefined: {msg}"),
            Error::ShapeMismatch { expected, got } => {
                write!(f, "shape mismatch: expected {expected}, got {got}")
            }
        }
    }
}

impl core::error::Error for Error {}
