//! Error type shared across the crate.

use thiserror::Error;

/// All failure modes surfaced by library operations.
///
/// Budget refusals are distinguished from validation errors so that callers
/// (notably the CLI) can map them to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// A dimension or length precondition was violated.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A numeric parameter was outside its documented domain.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A requested computation exceeds a configured size budget.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    /// Two grid functions do not share a support where they must.
    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    /// An iterative routine failed to converge within its limits.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// Input/output failure while reading or writing an artifact.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Helper for `InvalidParameter` with formatted reason.
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
