use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected S^{expected}, got S^{found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("density is not normalizable: integral = {integral}")]
    NonNormalizable { integral: f64 },

    #[error("density is negative ({value:e}) at theta0 = {angle}")]
    NegativeDensity { angle: f64, value: f64 },

    #[error("quadrature did not converge: last two estimates differ by {delta:e} at {nodes} nodes per axis")]
    NonConvergence { delta: f64, nodes: usize },

    #[error("enumeration/cost guard exceeded: {0}")]
    Guard(String),

    #[error("rejection sampler: {0}")]
    Sampling(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
