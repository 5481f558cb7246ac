use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{operation} is not supported for {kind} bodies")]
    UnsupportedKind { operation: &'static str, kind: &'static str },

    #[error("non-positive curvature {value:e} in direction {direction:?}")]
    NonPositiveCurvature { direction: Vec<f64>, value: f64 },

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("quadrature needs {required} nodes but the budget is {budget}")]
    NodeBudget { required: usize, budget: usize },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
