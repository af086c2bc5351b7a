use std::fmt;

use thiserror::Error;

/// Which matrix of a problem an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixRole {
    Channel(usize),
    Reference,
}

impl fmt::Display for MatrixRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixRole::Channel(j) => write!(f, "channel {j}"),
            MatrixRole::Reference => write!(f, "reference covariance"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}: matrix is not symmetric")]
    NonSymmetric(MatrixRole),
    #[error("{0}: matrix is not positive definite")]
    NotPositiveDefinite(MatrixRole),
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("channel {channel}: weight {weight} is not positive")]
    NonPositiveWeight { channel: usize, weight: f64 },
    #[error("divergence radius {0} is negative")]
    NegativeRadius(f64),
    #[error("channel ensemble is empty")]
    EmptyEnsemble,
    #[error("sum of prior and noise covariance could not be factorized")]
    SingularSum,
    #[error("reference covariance could not be factorized")]
    SingularReference,
    #[error("inverse covariance lost positive definiteness at alpha = {alpha}")]
    LostPositiveDefiniteness { alpha: f64 },
    #[error("{stage} did not converge within {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        stage: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error(
        "{direction} bound: KL radius {epsilon} not reachable; largest feasible alpha {max_alpha} reaches KL {max_kl}"
    )]
    BracketFailure {
        direction: &'static str,
        epsilon: f64,
        max_alpha: f64,
        max_kl: f64,
    },
    #[error("prior has no finite Fisher information")]
    FisherUndefined,
    #[error("sample covariance is singular")]
    DegenerateSample,
    #[error("importance weights degenerate for {fraction:.3} of outer draws")]
    DegenerateWeights { fraction: f64 },
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("sweep record out of order: {0}")]
    OrderingViolation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical solver, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::SingularSum
                | Error::SingularReference
                | Error::LostPositiveDefiniteness { .. }
                | Error::NoConvergence { .. }
                | Error::BracketFailure { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
