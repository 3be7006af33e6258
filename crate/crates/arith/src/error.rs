use thiserror::Error;

/// Failure modes shared by every evaluator in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not converge within {terms} terms (last term magnitude {last:e})")]
    NotConverged { terms: usize, last: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("ambiguous classification: value {value} is {residual} away from the nearest admissible result")]
    Ambiguous { value: f64, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
