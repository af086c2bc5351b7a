//! Problem data: the noise channels with their weights, the Gaussian
//! reference prior and the KL ball around it.
//!
//! All constructors validate. Matrices that are symmetric up to a relative
//! Frobenius error of [`SYMMETRY_TOLERANCE`] are accepted and replaced by
//! their symmetric part; positive definiteness is checked by attempting a
//! Cholesky factorization.

use crate::error::{Error, MatrixRole, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::Scalar;

pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

fn validate_spd<T: Scalar>(m: &Matrix<T>, dim: usize, role: MatrixRole) -> Result<Matrix<T>> {
    if !m.is_square() || m.rows() != dim {
        return Err(Error::DimensionMismatch {
            what: role.to_string(),
            expected: dim,
            found: if m.is_square() { m.rows() } else { m.cols() },
        });
    }
    if !m.is_finite() {
        return Err(Error::NotPositiveDefinite(role));
    }
    let tol = T::lit(SYMMETRY_TOLERANCE).max(T::epsilon() * T::lit(8.0));
    if m.relative_asymmetry() > tol {
        return Err(Error::NonSymmetric(role));
    }
    let sym = m.symmetrize();
    if Cholesky::factor(&sym).is_none() {
        return Err(Error::NotPositiveDefinite(role));
    }
    Ok(sym)
}

/// One channel `Y_j = X + N_j` with `N_j ~ N(0, noise_covariance)` and its
/// weight in the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel<T> {
    pub noise_covariance: Matrix<T>,
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEnsemble<T> {
    dimension: usize,
    channels: Vec<Channel<T>>,
}

impl<T: Scalar> ChannelEnsemble<T> {
    pub fn new(channels: Vec<Channel<T>>) -> Result<Self> {
        let first = channels.first().ok_or(Error::EmptyEnsemble)?;
        let dimension = first.noise_covariance.rows();
        if dimension == 0 {
            return Err(Error::DimensionMismatch {
                what: "channel 0".into(),
                expected: 1,
                found: 0,
            });
        }
        let mut validated = Vec::with_capacity(channels.len());
        for (j, ch) in channels.into_iter().enumerate() {
            let role = MatrixRole::Channel(j);
            let noise_covariance = validate_spd(&ch.noise_covariance, dimension, role)?;
            if !(ch.weight > T::zero()) || !ch.weight.is_finite() {
                return Err(Error::NonPositiveWeight {
                    channel: j,
                    weight: ch.weight.to_f64_lossy(),
                });
            }
            validated.push(Channel {
                noise_covariance,
                weight: ch.weight,
            });
        }
        Ok(Self {
            dimension,
            channels: validated,
        })
    }

    /// Convenience constructor from `(noise covariance, weight)` pairs.
    pub fn from_pairs(pairs: Vec<(Matrix<T>, T)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(noise_covariance, weight)| Channel {
                    noise_covariance,
                    weight,
                })
                .collect(),
        )
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn channels(&self) -> &[Channel<T>] {
        &self.channels
    }

    pub fn channel(&self, j: usize) -> Option<&Channel<T>> {
        self.channels.get(j)
    }

    pub fn weights(&self) -> Vec<T> {
        self.channels.iter().map(|c| c.weight).collect()
    }

    /// The single-channel ensemble `{(Σ_{N_j}, 1)}`.
    pub fn single(&self, j: usize) -> Option<Self> {
        self.channels.get(j).map(|c| Self {
            dimension: self.dimension,
            channels: vec![Channel {
                noise_covariance: c.noise_covariance.clone(),
                weight: T::one(),
            }],
        })
    }

    /// Same channels with every weight multiplied by `factor > 0`.
    pub fn with_scaled_weights(&self, factor: T) -> Result<Self> {
        Self::new(
            self.channels
                .iter()
                .map(|c| Channel {
                    noise_covariance: c.noise_covariance.clone(),
                    weight: c.weight * factor,
                })
                .collect(),
        )
    }
}

/// Reference prior `N(μ_0, Σ_0)`. The Cholesky factor and inverse of `Σ_0`
/// are computed once here.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianReference<T> {
    mean: Vec<T>,
    covariance: Matrix<T>,
    factor: Cholesky<T>,
    precision: Matrix<T>,
}

impl<T: Scalar> GaussianReference<T> {
    pub fn new(mean: Vec<T>, covariance: Matrix<T>) -> Result<Self> {
        let covariance = validate_spd(&covariance, mean.len(), MatrixRole::Reference)?;
        if mean.is_empty() {
            return Err(Error::DimensionMismatch {
                what: "reference mean".into(),
                expected: 1,
                found: 0,
            });
        }
        let factor = Cholesky::factor(&covariance).ok_or(Error::SingularReference)?;
        let precision = factor.inverse();
        Ok(Self {
            mean,
            covariance,
            factor,
            precision,
        })
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn covariance(&self) -> &Matrix<T> {
        &self.covariance
    }

    pub fn factor(&self) -> &Cholesky<T> {
        &self.factor
    }

    /// `Σ_0⁻¹`.
    pub fn precision(&self) -> &Matrix<T> {
        &self.precision
    }

    pub fn log_density(&self, x: &[T]) -> T {
        let diff: Vec<T> = x.iter().zip(&self.mean).map(|(&a, &b)| a - b).collect();
        let k = T::from_usize(self.dimension()).unwrap();
        let two_pi = T::lit(2.0 * std::f64::consts::PI);
        -T::lit(0.5) * (k * two_pi.ln() + self.factor.log_det() + self.factor.inv_quad_form(&diff))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceBall<T> {
    reference: GaussianReference<T>,
    radius: T,
}

impl<T: Scalar> DivergenceBall<T> {
    pub fn new(reference: GaussianReference<T>, radius: T) -> Result<Self> {
        if !(radius >= T::zero()) || !radius.is_finite() {
            return Err(Error::NegativeRadius(radius.to_f64_lossy()));
        }
        Ok(Self { reference, radius })
    }

    pub fn reference(&self) -> &GaussianReference<T> {
        &self.reference
    }

    /// Radius ε in nats.
    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn with_radius(&self, radius: T) -> Result<Self> {
        Self::new(self.reference.clone(), radius)
    }
}

/// A validated problem: channels plus divergence ball of matching dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem<T> {
    ensemble: ChannelEnsemble<T>,
    ball: DivergenceBall<T>,
}

impl<T: Scalar> Problem<T> {
    pub fn new(ensemble: ChannelEnsemble<T>, ball: DivergenceBall<T>) -> Result<Self> {
        if ensemble.dimension() != ball.reference().dimension() {
            return Err(Error::DimensionMismatch {
                what: "reference prior vs channels".into(),
                expected: ensemble.dimension(),
                found: ball.reference().dimension(),
            });
        }
        Ok(Self { ensemble, ball })
    }

    /// Validates raw problem data.
    pub fn from_parts(
        channels: Vec<(Matrix<T>, T)>,
        mean: Vec<T>,
        sigma0: Matrix<T>,
        epsilon: T,
    ) -> Result<Self> {
        let ensemble = ChannelEnsemble::from_pairs(channels)?;
        let reference = GaussianReference::new(mean, sigma0).map_err(|e| match e {
            Error::DimensionMismatch { found, .. } => Error::DimensionMismatch {
                what: "reference covariance vs mean".into(),
                expected: ensemble.dimension(),
                found,
            },
            other => other,
        })?;
        Self::new(ensemble, DivergenceBall::new(reference, epsilon)?)
    }

    pub fn ensemble(&self) -> &ChannelEnsemble<T> {
        &self.ensemble
    }

    pub fn ball(&self) -> &DivergenceBall<T> {
        &self.ball
    }

    pub fn reference(&self) -> &GaussianReference<T> {
        self.ball.reference()
    }

    pub fn epsilon(&self) -> T {
        self.ball.radius()
    }

    pub fn dimension(&self) -> usize {
        self.ensemble.dimension()
    }

    pub fn with_epsilon(&self, epsilon: T) -> Result<Self> {
        Self::new(self.ensemble.clone(), self.ball.with_radius(epsilon)?)
    }

    pub fn with_ensemble(&self, ensemble: ChannelEnsemble<T>) -> Result<Self> {
        Self::new(ensemble, self.ball.clone())
    }
}

/// Validates an ensemble against a ball and returns the problem handle.
pub fn validate_problem<T: Scalar>(
    ensemble: ChannelEnsemble<T>,
    ball: DivergenceBall<T>,
) -> Result<Problem<T>> {
    let ensemble = ChannelEnsemble::new(ensemble.channels)?;
    let reference = GaussianReference::new(
        ball.reference.mean.clone(),
        ball.reference.covariance.clone(),
    )?;
    Problem::new(ensemble, DivergenceBall::new(reference, ball.radius)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn scalar_problem_is_valid() {
        let p = Problem::from_parts(vec![(m(&[&[1.0]]), 1.0)], vec![0.0], m(&[&[1.0]]), 0.1);
        assert!(p.is_ok());
    }

    #[test]
    fn indefinite_noise_is_rejected() {
        let err = ChannelEnsemble::from_pairs(vec![(m(&[&[1.0, 2.0], &[2.0, 1.0]]), 1.0)])
            .unwrap_err();
        assert!(matches!(
            err,
            Error::NotPositiveDefinite(MatrixRole::Channel(0))
        ));
    }

    #[test]
    fn asymmetric_noise_is_rejected_with_index() {
        let good = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let bad = m(&[&[1.0, 0.1], &[0.0, 1.0]]);
        let err = ChannelEnsemble::from_pairs(vec![(good, 1.0), (bad, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::NonSymmetric(MatrixRole::Channel(1))));
    }

    #[test]
    fn rounding_level_asymmetry_is_symmetrized() {
        let a = m(&[&[2.0, 0.5 + 1e-15], &[0.5, 2.0]]);
        let e = ChannelEnsemble::from_pairs(vec![(a, 1.0)]).unwrap();
        let s = &e.channels()[0].noise_covariance;
        assert_eq!(s[(0, 1)], s[(1, 0)]);
    }

    #[test]
    fn weight_and_dimension_errors() {
        let i2 = Matrix::<f64>::identity(2);
        let i3 = Matrix::<f64>::identity(3);
        assert!(matches!(
            ChannelEnsemble::from_pairs(vec![(i2.clone(), 1.0), (i2.clone(), 0.0)]),
            Err(Error::NonPositiveWeight { channel: 1, .. })
        ));
        assert!(matches!(
            ChannelEnsemble::from_pairs(vec![(i2.clone(), 1.0), (i3.clone(), 1.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            Problem::from_parts(vec![(i2.clone(), 1.0)], vec![0.0; 3], i3, 0.1),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            Problem::from_parts(vec![(i2.clone(), 1.0)], vec![0.0; 2], i2, -0.1),
            Err(Error::NegativeRadius(_))
        ));
    }

    #[test]
    fn validation_is_idempotent() {
        let a = m(&[&[2.0, 0.3], &[0.3, 1.0]]);
        let p = Problem::from_parts(
            vec![(a.clone(), 0.5), (Matrix::identity(2), 2.0)],
            vec![1.0, -1.0],
            a,
            0.2,
        )
        .unwrap();
        let again = validate_problem(p.ensemble().clone(), p.ball().clone()).unwrap();
        assert_eq!(p, again);
    }
}
