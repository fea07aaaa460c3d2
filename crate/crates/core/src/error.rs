use alloc::string::String;
use core::fmt;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input violated a documented precondition.
    Validation(String),
    /// Two vectors, maps or models disagree on dimensionality.
    DimensionMismatch { expected: usize, found: usize },
    /// A fitting routine received fewer records than it requires.
    InsufficientData { needed: usize, found: usize },
    /// EM or k-means++ initialisation could not place a component on
    /// distinct data.
    CollapsedComponent { component: usize },
    /// The input has no spread (e.g. a constant series for a correlation).
    Degenerate(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Validation(msg) => write!(f, "validation error: {msg}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InsufficientData { needed, found } => {
                write!(f, "insufficient data: need at least {needed} records, found {found}")
            }
            Error::CollapsedComponent { component } => {
                write!(f, "fit error: component {component} collapsed onto identical data")
            }
            Error::Degenerate(msg) => write!(f, "degenerate input: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
