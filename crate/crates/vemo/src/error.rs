//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by any stage of the pipeline.
///
/// The variants map onto the CLI exit codes: configuration, I/O and parse
/// problems are input errors (2), data validation failures are validation
/// errors (3), checkpoint/dataset incompatibilities are artifact mismatches
/// (4), everything else is internal (1).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad argument or precondition violation (rejected before any work).
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Malformed input file (CSV, TOML, binary container).
    #[error("{0}")]
    Parse(String),

    /// Ingested data violates a domain or consistency rule.
    #[error("{0}")]
    Validation(String),

    /// Two artifacts that must agree (checkpoint vs. dataset cache) do not.
    #[error("{0}")]
    Mismatch(String),

    /// Non-finite numbers or other numeric breakdown during computation.
    #[error("{0}")]
    Numeric(String),
}

impl Error {
    /// Process exit code for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) | Error::Parse(_) => 2,
            Error::Validation(_) => 3,
            Error::Mismatch(_) => 4,
            Error::Numeric(_) => 1,
        }
    }
}
