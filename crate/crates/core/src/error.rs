use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative or adaptive procedure hit its iteration cap. The best
    /// estimate reached so far is carried along.
    #[error("{what} did not converge after {iterations} iterations (estimate {estimate:e}, error {error_estimate:e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        estimate: f64,
        error_estimate: f64,
    },

    /// The requested scenario is not covered by the closed forms.
    #[error("unsupported scenario: {0}")]
    Unsupported(String),

    /// A scan finished without meeting its stopping criterion.
    #[error("not found: {0}")]
    NotFound(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
