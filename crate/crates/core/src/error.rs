//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An iterative numerical routine did not reach its tolerance.
    #[error("numerical routine failed to converge: {0}")]
    NonConvergence(String),

    /// An operation touched the origin, where the density vanishes and
    /// the logarithmic derivative is undefined.
    #[error("operation undefined at the origin (endpoint at x = {position})")]
    OriginSingularity { position: f64 },

    /// A move or experiment was pointed at a region/pair that does not
    /// have the required structure.
    #[error("invalid target: {0}")]
    InvalidTarget(String),

    /// The requested operation needs a log-concave density.
    #[error("density is not log-concave; operation requires the log-concave flag")]
    LogConcavityRequired,

    /// A declared density flag failed its numerical validation.
    #[error("density flag '{flag}' violated at x = {witness} (magnitude {magnitude:e})")]
    FlagViolation {
        flag: &'static str,
        witness: f64,
        magnitude: f64,
    },

    /// Adaptive step size underflowed during flow integration.
    #[error("flow step size underflow at t = {time} (dt = {dt:e})")]
    StepFailure { time: f64, dt: f64 },

    /// The flow hit its step budget before the stop condition fired.
    #[error("flow exceeded maximum step count ({0})")]
    MaxStepsExceeded(u64),

    /// Malformed input (bad masses, broken configuration invariants, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
