//! Upper and lower bounds on the weighted sum of MMSEs over a bank of
//! additive Gaussian noise channels `Y_j = X + N_j`, when the prior of `X`
//! is only known to lie in a Kullback-Leibler ball around a Gaussian
//! reference.
//!
//! The extremal priors are Gaussian, so the bounds reduce to a matrix
//! fixed-point equation for the extremal covariance coupled with an active
//! KL constraint. [`solver`] solves that system; [`baselines`] provides the
//! per-channel LMMSE and Bayesian Cramér-Rao comparisons, [`prior`] the
//! analytic prior families and [`mc`] a Monte Carlo oracle that estimates
//! true MMSEs independently of the closed forms.
//!
//! The linear-algebra core ([`linalg`], [`channel`], [`analytics`],
//! [`solver`], [`baselines`]) is generic over the floating point type; the
//! aliases at the crate root fix it to `f64`, which is what the prior
//! library, the Monte Carlo oracle and the sweeps use.
//!
//! ```
//! use wmmse_core::{solve_bound, Direction, Matrix, Problem, SolverOptions};
//!
//! let one = Matrix::identity(1);
//! let problem = Problem::from_parts(vec![(one.clone(), 1.0)], vec![0.0], one, 0.1).unwrap();
//! let upper = solve_bound(Direction::Upper, &problem, &SolverOptions::default()).unwrap();
//! let lower = solve_bound(Direction::Lower, &problem, &SolverOptions::default()).unwrap();
//! assert!(lower.bound_value < 0.5 && 0.5 < upper.bound_value);
//! ```

pub mod analytics;
pub mod baselines;
pub mod channel;
pub mod config;
pub mod error;
pub mod linalg;
pub mod mc;
pub mod prior;
pub mod scenario;
pub mod solver;
pub mod sweep;

pub use analytics::{
    kl_same_mean_gaussians, linear_estimator_mse, mmse_matrix, mmse_trace, weight_matrix,
    weighted_mmse_sum,
};
pub use baselines::{cramer_rao_lower, lmmse_upper};
pub use error::{Error, MatrixRole, Result};
pub use solver::{
    kl_gap, local_bound, local_bounds_weighted, sigma_of_alpha, solve_bound, Direction,
    SolveMethod,
};

/// Floating point types the generic core can be instantiated with.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal; exact for `f64`, rounded for `f32`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub type Real = f64;
pub type Matrix = linalg::Matrix<Real>;
pub type Cholesky = linalg::Cholesky<Real>;
pub type Channel = channel::Channel<Real>;
pub type ChannelEnsemble = channel::ChannelEnsemble<Real>;
pub type GaussianReference = channel::GaussianReference<Real>;
pub type DivergenceBall = channel::DivergenceBall<Real>;
pub type Problem = channel::Problem<Real>;
pub type LinearEstimator = analytics::LinearEstimator<Real>;
pub type MmseSummary = analytics::MmseSummary<Real>;
pub type SolverOptions = solver::SolverOptions<Real>;
pub type FixedPoint = solver::FixedPoint<Real>;
pub type BoundResult = solver::BoundResult<Real>;
