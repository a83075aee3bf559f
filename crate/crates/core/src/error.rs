//! Error types shared across the simulator.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an operation precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Sub-network training exhausted its epoch budget before reaching the
    /// target MSE. Carries the best MSE actually achieved.
    #[error("training failed: best MSE {best_mse} did not reach target {target_mse}")]
    TrainingFailure { best_mse: f64, target_mse: f64 },

    /// A wiring plan produced an ill-formed netlist. The message names the
    /// offending port or loop.
    #[error("composition error: {0}")]
    Composition(String),

    /// A netlist failed validation; diagnostics are rendered one per line.
    #[error("netlist validation failed:\n{0}")]
    InvalidNetlist(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
