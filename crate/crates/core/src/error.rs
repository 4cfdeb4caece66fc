use nalgebra::DVector;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("resource error: {0}")]
    Resource(String),

    /// A one-step map produced a non-finite state. Carries the state the step
    /// started from.
    #[error("step overflow from state {state:?}")]
    Overflow { state: DVector<f64> },

    #[error("controller error: {0}")]
    Controller(String),

    #[error("implicit solve failed after {iterations} iterations (residuals {trace:?})")]
    Solver { iterations: usize, trace: Vec<f64> },

    #[error("experiment error: {0}")]
    Experiment(String),
}

pub type Result<T> = std::result::Result<T, Error>;
