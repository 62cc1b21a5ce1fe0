use thiserror::Error;

/// Errors raised by the estimators, potentials and oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PavgError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("potential is singular at {0:?}")]
    SingularPoint(Vec<f64>),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("Gaussian transform diverges: {0}")]
    TransformDivergent(String),

    #[error("potential is not locally integrable: {0}")]
    NotLocallyIntegrable(String),

    #[error("integration domain too small: boundary/peak ratio {ratio:.3e} exceeds {limit:.1e}")]
    DomainTooSmall { ratio: f64, limit: f64 },

    #[error("grid under-resolves the high-temperature kernel: width {width:.4e} < 2 dx = {two_dx:.4e}")]
    GridResolution { width: f64, two_dx: f64 },

    #[error("insufficient signal for rate fit: {0}")]
    InsufficientSignal(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for PavgError {
    fn from(e: std::io::Error) -> Self {
        PavgError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, PavgError>;
