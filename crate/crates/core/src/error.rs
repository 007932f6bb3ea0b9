use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// Non-finite entries, empty inputs, odd bit counts and the like.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Inputs that are well formed but carry no usable information
    /// (for example water-filling over all-zero gains).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Configuration value out of range or inconsistent with another one.
    #[error("configuration error: {0}")]
    Config(String),

    /// Antenna dimensions cannot support the requested scheme.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Structured-text parsing failed; `path` is the dotted key path.
    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },

    /// An internal consistency check failed.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
