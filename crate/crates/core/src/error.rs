use thiserror::Error;

/// Unified error type for the library.
///
/// Every fallible operation returns one of these variants so that callers
/// (notably the CLI) can map failures to exit codes without inspecting
/// message strings.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Text input could not be parsed; `position` is a byte offset.
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    /// A configured resource budget (memory, table size, enumeration count)
    /// would be exceeded. The message includes the estimated cost.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// The input is structurally valid but degenerate for the requested
    /// computation (for example an empty scan window).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An internal invariant failed. This indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
