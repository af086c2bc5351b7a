//! Closed-form quantities for Gaussian priors observed through Gaussian
//! noise: estimator gains, MMSE matrices, same-mean KL divergence and the
//! MSE of a fixed affine estimator.

use crate::channel::{ChannelEnsemble, GaussianReference};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::Scalar;

fn check_pair<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, what: &str) -> Result<()> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
        return Err(Error::DimensionMismatch {
            what: what.into(),
            expected: a.rows(),
            found: b.rows(),
        });
    }
    Ok(())
}

/// `(Σ_X + Σ_N)⁻¹ Σ_N`, via a factorization of the sum.
fn sum_solve_noise<T: Scalar>(sigma_x: &Matrix<T>, sigma_n: &Matrix<T>) -> Result<Matrix<T>> {
    check_pair(sigma_x, sigma_n, "prior vs noise covariance")?;
    let sum = sigma_x + sigma_n;
    let chol = Cholesky::factor(&sum).ok_or(Error::SingularSum)?;
    Ok(chol.solve(sigma_n))
}

/// Gain `W = Σ_N (Σ_X + Σ_N)⁻¹` of the Gaussian conditional-mean estimator
/// `x̂ = (I − W) y + W μ_0`.
pub fn weight_matrix<T: Scalar>(sigma_x: &Matrix<T>, sigma_n: &Matrix<T>) -> Result<Matrix<T>> {
    // (Σ_X+Σ_N) symmetric, so Wᵀ = (Σ_X+Σ_N)⁻¹ Σ_N
    Ok(sum_solve_noise(sigma_x, sigma_n)?.transpose())
}

/// `Σ_X (Σ_X + Σ_N)⁻¹ Σ_N`, the error covariance of the Gaussian MMSE
/// estimator.
pub fn mmse_matrix<T: Scalar>(sigma_x: &Matrix<T>, sigma_n: &Matrix<T>) -> Result<Matrix<T>> {
    Ok(sigma_x * &sum_solve_noise(sigma_x, sigma_n)?)
}

pub fn mmse_trace<T: Scalar>(sigma_x: &Matrix<T>, sigma_n: &Matrix<T>) -> Result<T> {
    Ok(sigma_x.trace_of_product(&sum_solve_noise(sigma_x, sigma_n)?))
}

/// Per-channel MMSE matrices and traces for a Gaussian prior with
/// covariance `Σ_X`, plus their weighted sum.
#[derive(Debug, Clone, PartialEq)]
pub struct MmseSummary<T> {
    pub per_channel_matrix: Vec<Matrix<T>>,
    pub per_channel_trace: Vec<T>,
    pub weighted_sum: T,
    /// `Σ_0⁻¹ Σ_X`, present when a reference was supplied.
    pub snr0: Option<Matrix<T>>,
}

impl<T: Scalar> MmseSummary<T> {
    /// `Σ_j λ_j tr(MMSE_j)` recomputed from the stored traces.
    pub fn recompute(&self, weights: &[T]) -> T {
        weights
            .iter()
            .zip(&self.per_channel_trace)
            .fold(T::zero(), |acc, (&l, &t)| acc + l * t)
    }
}

pub fn weighted_mmse_sum<T: Scalar>(
    sigma_x: &Matrix<T>,
    ensemble: &ChannelEnsemble<T>,
    reference: Option<&GaussianReference<T>>,
) -> Result<MmseSummary<T>> {
    if sigma_x.rows() != ensemble.dimension() || !sigma_x.is_square() {
        return Err(Error::DimensionMismatch {
            what: "prior covariance vs channels".into(),
            expected: ensemble.dimension(),
            found: sigma_x.rows(),
        });
    }
    let mut per_channel_matrix = Vec::with_capacity(ensemble.len());
    let mut per_channel_trace = Vec::with_capacity(ensemble.len());
    let mut weighted_sum = T::zero();
    for ch in ensemble.channels() {
        let m = mmse_matrix(sigma_x, &ch.noise_covariance)?;
        let t = m.trace();
        weighted_sum = weighted_sum + ch.weight * t;
        per_channel_trace.push(t);
        per_channel_matrix.push(m);
    }
    let snr0 = match reference {
        Some(r) => {
            if r.dimension() != sigma_x.rows() {
                return Err(Error::DimensionMismatch {
                    what: "reference vs prior covariance".into(),
                    expected: sigma_x.rows(),
                    found: r.dimension(),
                });
            }
            Some(r.factor().solve(sigma_x))
        }
        None => None,
    };
    Ok(MmseSummary {
        per_channel_matrix,
        per_channel_trace,
        weighted_sum,
        snr0,
    })
}

/// `D_KL(N(μ, Σ_X) ‖ N(μ, Σ_0))` in nats.
pub fn kl_same_mean_gaussians<T: Scalar>(sigma_x: &Matrix<T>, sigma_0: &Matrix<T>) -> Result<T> {
    check_pair(sigma_x, sigma_0, "KL arguments")?;
    let c0 = Cholesky::factor(sigma_0).ok_or(Error::SingularReference)?;
    kl_with_reference_factor(sigma_x, &c0)
}

pub(crate) fn kl_with_reference_factor<T: Scalar>(
    sigma_x: &Matrix<T>,
    c0: &Cholesky<T>,
) -> Result<T> {
    let cx = Cholesky::factor(sigma_x).ok_or(Error::NotPositiveDefinite(
        crate::error::MatrixRole::Reference,
    ))?;
    let k = T::from_usize(sigma_x.rows()).unwrap();
    let tr = c0.solve(sigma_x).trace();
    let log_det = cx.log_det() - c0.log_det();
    Ok(T::lit(0.5) * (tr - k - log_det))
}

/// Affine estimator `x̂ = (I − W) y + W μ_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEstimator<T> {
    pub gain: Matrix<T>,
    pub anchor: Vec<T>,
}

impl<T: Scalar> LinearEstimator<T> {
    pub fn new(gain: Matrix<T>, anchor: Vec<T>) -> Result<Self> {
        if !gain.is_square() || gain.rows() != anchor.len() {
            return Err(Error::DimensionMismatch {
                what: "estimator gain vs anchor".into(),
                expected: anchor.len(),
                found: gain.rows(),
            });
        }
        Ok(Self { gain, anchor })
    }

    /// The MMSE estimator for prior `N(anchor, Σ_X)` and noise `Σ_N`.
    pub fn matched(sigma_x: &Matrix<T>, sigma_n: &Matrix<T>, anchor: Vec<T>) -> Result<Self> {
        Self::new(weight_matrix(sigma_x, sigma_n)?, anchor)
    }

    pub fn estimate(&self, y: &[T]) -> Result<Vec<T>> {
        linear_estimate(self, y)
    }
}

pub fn linear_estimate<T: Scalar>(est: &LinearEstimator<T>, y: &[T]) -> Result<Vec<T>> {
    if y.len() != est.anchor.len() {
        return Err(Error::DimensionMismatch {
            what: "observation".into(),
            expected: est.anchor.len(),
            found: y.len(),
        });
    }
    // (I − W) y + W μ0 = y − W (y − μ0)
    let diff: Vec<T> = y.iter().zip(&est.anchor).map(|(&a, &b)| a - b).collect();
    let w_diff = est.gain.mul_vec(&diff);
    Ok(y.iter().zip(w_diff).map(|(&a, b)| a - b).collect())
}

/// Exact MSE of the affine estimator with gain `W` when the prior is
/// `N(μ_0, Σ)` and the noise `N(0, Σ_N)`:
/// `tr(W Σ Wᵀ) + tr((I − W) Σ_N (I − W)ᵀ)`.
pub fn linear_estimator_mse<T: Scalar>(
    gain: &Matrix<T>,
    prior_cov: &Matrix<T>,
    sigma_n: &Matrix<T>,
) -> Result<T> {
    check_pair(gain, prior_cov, "estimator gain vs prior covariance")?;
    check_pair(gain, sigma_n, "estimator gain vs noise covariance")?;
    let residual_gain = &Matrix::identity(gain.rows()) - gain;
    let signal = (gain * prior_cov).trace_of_product(&gain.transpose());
    let noise = (&residual_gain * sigma_n).trace_of_product(&residual_gain.transpose());
    Ok(signal + noise)
}
