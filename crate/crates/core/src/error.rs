use thiserror::Error;

/// Errors raised by the numerical layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("grid functions live on different boxes")]
    BoxMismatch,
    #[error("multiplier output is not real (relative imaginary residue {0:.3e})")]
    LossOfReality(f64),
    #[error("under-resolved: {0}")]
    Resolution(String),
    #[error("hypothesis violation: {0}")]
    Hypothesis(String),
    #[error("matrix not positive definite at {0}")]
    NotPositiveDefinite(String),
    #[error("basis has {0} functions, limit is {1}")]
    SizeCap(usize, usize),
    #[error("linear algebra: {0}")]
    Solver(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
