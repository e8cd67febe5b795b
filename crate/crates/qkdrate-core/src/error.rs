//! Error type shared by the whole crate.
//!
//! Three failure classes matter operationally and map to distinct CLI exit
//! codes: configuration problems (bad parameters, violated constraints),
//! domain errors (a function called outside its mathematical domain), and
//! numeric inconsistencies detected mid-pipeline (empty bound intervals,
//! non-converging quadrature). Constraint *violations* found by
//! [`crate::params::validate_constraints`] are data, not errors; only
//! construction of a parameter set from violating values fails.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Invalid configuration or parameter values (CLI exit code 2).
    #[error("configuration error: {0}")]
    Config(String),
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Internally inconsistent numbers: empty bound intervals, failed
    /// convergence, contradictory statistics (CLI exit code 3).
    #[error("numeric inconsistency: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
