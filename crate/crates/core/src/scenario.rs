//! Sensor-field scenario: a source observed by sensors at different
//! distances under isotropic power attenuation `ρ_j² = ρ_0² / (1 + γ d_j^m)`.
//!
//! The channel model keeps unit gain, `Y_j = X + N_j`, so weaker received
//! power shows up as proportionally stronger noise:
//! `Σ_{N_j} = σ_0² (1 + γ d_j^m) I`.

use crate::channel::{Channel, ChannelEnsemble};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SensorField {
    /// Sensor-to-source distances in meters; 0 is allowed.
    pub distances: Vec<f64>,
    pub source_power: f64,
    pub decay: f64,
    /// Path-loss exponent, in `[2, 3]`.
    pub exponent: f64,
    pub base_noise: f64,
}

impl SensorField {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidArgument(format!("{what} = {v}")));
        if self.distances.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        for &d in &self.distances {
            if !(d >= 0.0 && d.is_finite()) {
                return bad("distance", d);
            }
        }
        for (what, v) in [
            ("source power", self.source_power),
            ("decay", self.decay),
            ("base noise", self.base_noise),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(what, v);
            }
        }
        if !(2.0..=3.0).contains(&self.exponent) {
            return bad("exponent", self.exponent);
        }
        Ok(())
    }

    /// `ρ_0² / (1 + γ d_j^m)` per sensor.
    pub fn received_power(&self) -> Vec<f64> {
        self.distances
            .iter()
            .map(|d| self.source_power / (1.0 + self.decay * d.powf(self.exponent)))
            .collect()
    }
}

/// Channels with `Σ_{N_j} = σ_0² (1 + γ d_j^m) I_K`. Weights default to 1.
pub fn noise_from_distances(
    field: &SensorField,
    dimension: usize,
    weights: Option<&[f64]>,
) -> Result<ChannelEnsemble<f64>> {
    field.validate()?;
    if dimension == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    if let Some(w) = weights {
        if w.len() != field.distances.len() {
            return Err(Error::DimensionMismatch {
                what: "weights vs distances".into(),
                expected: field.distances.len(),
                found: w.len(),
            });
        }
    }
    let channels = field
        .received_power()
        .iter()
        .enumerate()
        .map(|(j, rho2)| Channel {
            noise_covariance: Matrix::scaled_identity(
                dimension,
                field.base_noise * field.source_power / rho2,
            ),
            weight: weights.map_or(1.0, |w| w[j]),
        })
        .collect();
    ChannelEnsemble::new(channels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(distances: Vec<f64>) -> SensorField {
        SensorField {
            distances,
            source_power: 1.0,
            decay: 1.0,
            exponent: 2.0,
            base_noise: 1.0,
        }
    }

    #[test]
    fn noise_values() {
        let e = noise_from_distances(&field(vec![0.0, 3.0]), 2, None).unwrap();
        assert_eq!(e.channels()[0].noise_covariance, Matrix::identity(2));
        assert!((e.channels()[1].noise_covariance[(0, 0)] - 10.0).abs() < 1e-12);
        assert_eq!(e.weights(), vec![1.0, 1.0]);
    }

    #[test]
    fn nearer_is_less_noisy() {
        let e = noise_from_distances(&field(vec![1.0, 2.0, 5.0]), 3, None).unwrap();
        let tr: Vec<f64> = e.channels().iter().map(|c| c.noise_covariance.trace()).collect();
        assert!(tr[0] < tr[1] && tr[1] < tr[2]);
    }

    #[test]
    fn invalid_fields() {
        let mut f = field(vec![1.0]);
        f.exponent = 4.0;
        assert!(f.validate().is_err());
        let f = field(vec![-1.0]);
        assert!(f.validate().is_err());
        assert!(noise_from_distances(&field(vec![1.0]), 1, Some(&[1.0, 2.0])).is_err());
    }
}
