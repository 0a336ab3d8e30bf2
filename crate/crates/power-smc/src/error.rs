//! Error type shared across the crate.
//!
//! Variants map onto the binary's exit codes: input/state/model-spec problems
//! exit 1, enumeration budget overruns exit 2, numerical and support failures
//! exit 3.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed arguments, out-of-range tokens, missing files, bad configs.
    #[error("input error: {0}")]
    Input(String),

    /// A decode state that cannot exist for the model (e.g. stepped past the
    /// hard horizon without absorbing).
    #[error("state error: {0}")]
    State(String),

    /// Enumeration budget exceeded.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// A model definition that violates its own contract (unnormalized row,
    /// unterminated probability mass, missing table entry).
    #[error("model spec error: {0}")]
    ModelSpec(String),

    /// A proposal assigned zero probability to a sampled token.
    #[error("support violation: {0}")]
    Support(String),

    /// Numerical invariant broken at runtime (non-finite weights, degenerate
    /// normalizers).
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 input, 2 capacity, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::State(_) | Error::ModelSpec(_) => 1,
            Error::Io(_) | Error::Json(_) => 1,
            Error::Capacity(_) => 2,
            Error::Support(_) | Error::Numerical(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
