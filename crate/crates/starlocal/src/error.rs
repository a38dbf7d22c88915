use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument values (bad scenario size, negative entries, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An index outside the valid range of a table or realization.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// Two objects built for different scenario sizes were combined.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A requested computation exceeds the configured size caps.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// A realization on which a normalized quantity is undefined
    /// (e.g. a signed combination annihilates the state).
    #[error("degenerate realization: {0}")]
    DegenerateRealization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
