use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a function.
    #[error("{function}: argument {value} outside domain ({requirement})")]
    Domain {
        function: &'static str,
        value: f64,
        requirement: &'static str,
    },

    /// The hypergeometric evaluator was asked for a parameter family or
    /// argument range it does not cover.
    #[error("unsupported hypergeometric domain: {0}")]
    UnsupportedDomain(String),

    /// A physical parameter violates its invariant.
    #[error("invalid parameter `{field}`: {value} violates {bound}")]
    InvalidParam {
        field: &'static str,
        value: f64,
        bound: &'static str,
    },

    #[error("cannot convert from {from} to {to}")]
    UnitMismatch { from: String, to: String },

    /// Quadrature exhausted its budget. The partial value and its error
    /// estimate are carried along so callers can decide what to do.
    #[error(
        "quadrature did not converge: value {value:e}, error estimate {abs_error:e} \
         exceeds tolerance {tolerance:e}"
    )]
    Convergence {
        value: f64,
        abs_error: f64,
        tolerance: f64,
    },
}
