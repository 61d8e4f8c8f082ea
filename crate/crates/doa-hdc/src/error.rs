//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("label error: {0}")]
    Label(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("state error: {0}")]
    State(String),

    #[error("decoding failed: placed {found} of {requested} peaks")]
    Decode { found: usize, requested: usize },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for configuration problems, 3 for
    /// data/file problems, 4 for numerical/runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Shape(_) => 2,
            Error::Io(_) | Error::Corrupt(_) | Error::Version { .. } => 3,
            Error::Degenerate(_)
            | Error::Label(_)
            | Error::Training(_)
            | Error::State(_)
            | Error::Decode { .. } => 4,
        }
    }
}
