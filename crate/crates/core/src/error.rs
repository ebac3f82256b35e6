//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failure modes of the simulation and analysis routines.
///
/// Variants are grouped by *who* is at fault: the caller (`Argument`,
/// `Config`), the data (`Domain`, `Undefined`, `FitInfeasible`), the
/// numerics (`Numerical`, `FitFailed`) or the host (`Resource`).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A configuration value makes the requested computation meaningless.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested quantity is undefined for the given data.
    #[error("undefined result: {0}")]
    Undefined(String),

    /// Too few usable points remain for a fit.
    #[error("fit infeasible: {0}")]
    FitInfeasible(String),

    /// An iterative fit diverged or produced non-finite values.
    #[error("fit failed after {iterations} iterations: {reason} (last iterate {last:?})")]
    FitFailed {
        reason: String,
        iterations: usize,
        last: Vec<f64>,
    },

    /// A numerical routine could not reach its accuracy target.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A configured resource cap would be exceeded.
    #[error("resource limit: {0}")]
    Resource(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}
