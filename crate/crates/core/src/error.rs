use std::io;

use thiserror::Error;

/// Errors produced by index construction, search and file handling.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller supplied arguments that violate an operation's preconditions.
    #[error("usage error: {0}")]
    Usage(String),
    /// A file did not match the expected binary layout.
    #[error("format error: {0}")]
    Format(String),
    #[error("unsupported index version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
    /// Clustering or index statistics hit a degenerate configuration.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// An instrumented check found a broken structural invariant.
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

pub(crate) fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}
