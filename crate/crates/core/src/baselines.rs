//! Comparison bounds that only need the moments of the prior: the LMMSE
//! upper bound and the Bayesian Cramér-Rao lower bound.

use crate::analytics::weighted_mmse_sum;
use crate::channel::ChannelEnsemble;
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::Scalar;

/// `Σ_j λ_j tr(Σ_X (Σ_X + Σ_{N_j})⁻¹ Σ_{N_j})`: the weighted MSE of the
/// per-channel best affine estimators for a prior with covariance `Σ_X`.
pub fn lmmse_upper<T: Scalar>(sigma_x: &Matrix<T>, ensemble: &ChannelEnsemble<T>) -> Result<T> {
    Ok(weighted_mmse_sum(sigma_x, ensemble, None)?.weighted_sum)
}

/// `Σ_j λ_j K² / (tr(Σ_{N_j}⁻¹) + J)` where `J` is the trace of the prior's
/// Fisher information matrix. `None` means the prior has none.
pub fn cramer_rao_lower<T: Scalar>(fisher: Option<T>, ensemble: &ChannelEnsemble<T>) -> Result<T> {
    let fisher = match fisher {
        Some(f) if f.is_finite() && f > T::zero() => f,
        _ => return Err(Error::FisherUndefined),
    };
    let k = T::from_usize(ensemble.dimension()).unwrap();
    let mut total = T::zero();
    for ch in ensemble.channels() {
        // validated SPD, the factorization cannot fail
        let noise_info = Cholesky::factor(&ch.noise_covariance)
            .ok_or(Error::SingularSum)?
            .inverse()
            .trace();
        total = total + ch.weight * k * k / (noise_info + fisher);
    }
    Ok(total)
}
