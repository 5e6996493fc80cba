use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two collections that must agree in length do not.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// An experiment or dataset description is internally inconsistent.
    #[error("invalid configuration: {0}")]
    Validation(String),

    /// The negative binomial quantile scan ran past its cap.
    #[error("quantile scan exceeded cap k = {cap} for u = {u}")]
    QuantileCap { u: f64, cap: u64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
