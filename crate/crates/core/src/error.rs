use alloc::string::String;
use core::fmt;

/// Error type shared by every module in the crate.
///
/// Variants are coarse on purpose: callers branch on the failure class,
/// the message carries the specifics (shapes, channel ids, row numbers).
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Dimension disagreement between operands; message names both shapes.
    Shape(String),
    /// An argument outside its contract (non-finite input, zero dimension, ...).
    InvalidArgument(String),
    /// A value object reached a forbidden state (non-finite cell state, ...).
    InvalidState(String),
    /// A configuration field failed validation; message names the field.
    Config(String),
    /// Degenerate numeric input (zero variance, constant channel, ...).
    Degenerate(String),
    /// Row-level ingestion failure.
    Ingestion { row: usize, message: String },
    /// A pipeline stage produced no usable samples.
    Empty(String),
    /// Linear system has no unique solution.
    Singular(String),
    /// Not enough past observations to fill a lookback window.
    History(String),
    /// Every trial of a search failed.
    Search(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(m) => write!(f, "shape mismatch: {m}"),
            Error::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            Error::InvalidState(m) => write!(f, "invalid state: {m}"),
            Error::Config(m) => write!(f, "invalid config: {m}"),
            Error::Degenerate(m) => write!(f, "degenerate input: {m}"),
            Error::Ingestion { row, message } => write!(f, "ingestion error at row {row}: {message}"),
            Error::Empty(m) => write!(f, "empty result: {m}"),
            Error::Singular(m) => write!(f, "singular system: {m}"),
            Error::History(m) => write!(f, "insufficient history: {m}"),
            Error::Search(m) => write!(f, "search failed: {m}"),
        }
    }
}

impl core::error::Error for Error {}
