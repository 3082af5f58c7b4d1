use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e} below -{tolerance:e})")]
    NotPositiveSemidefinite { eigenvalue: f64, tolerance: f64 },

    /// Every water level yields zero rate, so a positive rate cannot be met.
    #[error("rate {rate} is unattainable: the estimator spectrum is identically zero")]
    UnattainableRate { rate: f64 },

    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    #[error("{what} did not converge after {iterations} iterations")]
    ConvergenceFailure { what: &'static str, iterations: usize },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
