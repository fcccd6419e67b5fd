//! Crate-wide error type.

use thiserror::Error;

/// Unified error type for every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A text input (edge list, config file) could not be parsed.
    /// Line numbers are 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A configuration value is out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Matrix / graph dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An API contract was violated (e.g. an operation that requires
    /// full-dimension embeddings was handed a feature slice).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Workers disagreed about the shape or kind of a collective.
    #[error("collective error: {0}")]
    Collective(String),

    /// The collective protocol broke down: sequence mismatch, overlapping
    /// keys, or a round timeout (a peer never showed up).
    #[error("protocol error: {0}")]
    Protocol(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
