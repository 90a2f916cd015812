use thiserror::Error;

/// Errors produced by the estimation and inference routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty sample: at least one observation is required")]
    EmptySample,

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate input: control variance is zero, mean difference is non-positive and the treatment variance exceeds the control variance")]
    DegenerateInput,

    #[error("population mixture moments undefined: mean difference {0} is not positive")]
    UndefinedPopulation(f64),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
