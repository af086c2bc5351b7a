//! Prior families used to exercise the bounds: Gaussian, radially symmetric
//! generalized Gaussian `∝ exp(−‖x‖^p / p)` and the uniform distribution on
//! a `K`-ball. Moments, Fisher information, KL distance to the moment-matched
//! Gaussian, log-densities and samplers.
//!
//! All gamma-function arithmetic is done on `ln Γ`, which keeps `p ≪ 1`
//! (where `Γ(K/p)` overflows) usable.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::channel::GaussianReference;
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub enum PriorFamily {
    Gaussian(GaussianReference<f64>),
    GeneralizedGaussian { p: f64 },
    UniformBall { radius: f64 },
}

/// A prior family together with its dimension `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    family: PriorFamily,
    dimension: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorMoments {
    pub mean: Vec<f64>,
    pub covariance: Matrix<f64>,
    /// Trace of the Fisher information matrix, if finite.
    pub fisher: Option<f64>,
    /// `min_Q D_KL(P ‖ Q)` over Gaussians `Q`, attained by moment matching.
    pub epsilon_to_best_gaussian: Option<f64>,
}

fn check_dimension(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidPrior("dimension must be at least 1".into()));
    }
    Ok(())
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidPrior(format!("exponent p = {p} must be positive")));
    }
    Ok(())
}

impl PriorSpec {
    pub fn gaussian(reference: GaussianReference<f64>) -> Self {
        let dimension = reference.dimension();
        Self {
            family: PriorFamily::Gaussian(reference),
            dimension,
        }
    }

    pub fn generalized_gaussian(p: f64, dimension: usize) -> Result<Self> {
        check_exponent(p)?;
        check_dimension(dimension)?;
        Ok(Self {
            family: PriorFamily::GeneralizedGaussian { p },
            dimension,
        })
    }

    pub fn uniform_ball(radius: f64, dimension: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidPrior(format!("radius {radius} must be positive")));
        }
        check_dimension(dimension)?;
        Ok(Self {
            family: PriorFamily::UniformBall { radius },
            dimension,
        })
    }

    pub fn family(&self) -> &PriorFamily {
        &self.family
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn moments(&self) -> Result<PriorMoments> {
        let k = self.dimension;
        match &self.family {
            PriorFamily::Gaussian(r) => Ok(PriorMoments {
                mean: r.mean().to_vec(),
                covariance: r.covariance().clone(),
                fisher: Some(r.precision().trace()),
                epsilon_to_best_gaussian: Some(0.0),
            }),
            PriorFamily::GeneralizedGaussian { p } => Ok(PriorMoments {
                mean: vec![0.0; k],
                covariance: Matrix::scaled_identity(k, gen_gauss_covariance(*p, k)?),
                fisher: gen_gauss_fisher(*p, k).ok(),
                epsilon_to_best_gaussian: Some(gen_gauss_epsilon(*p, k)?),
            }),
            PriorFamily::UniformBall { radius } => uniform_ball_moments(*radius, k),
        }
    }

    /// The moment-matched Gaussian, i.e. the reference of the KL ball.
    pub fn matched_gaussian(&self) -> Result<GaussianReference<f64>> {
        let m = self.moments()?;
        GaussianReference::new(m.mean, m.covariance)
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let k = self.dimension as f64;
        match &self.family {
            PriorFamily::Gaussian(r) => r.log_density(x),
            PriorFamily::GeneralizedGaussian { p } => {
                gen_gauss_log_normalizer(*p, self.dimension) - norm(x).powf(*p) / p
            }
            PriorFamily::UniformBall { radius } => {
                if norm(x) <= *radius {
                    -(0.5 * k * PI.ln() + k * radius.ln() - ln_gamma(0.5 * k + 1.0))
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Writes one draw into `out` (length `K`).
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let k = self.dimension;
        match &self.family {
            PriorFamily::Gaussian(r) => {
                let z: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
                let l = r.factor().lower();
                for i in 0..k {
                    out[i] = r.mean()[i] + (0..=i).map(|j| l[(i, j)] * z[j]).sum::<f64>();
                }
            }
            PriorFamily::GeneralizedGaussian { p } => {
                let gamma = Gamma::new(k as f64 / p, 1.0).expect("positive shape");
                let g: f64 = gamma.sample(rng);
                let r = (p * g).powf(1.0 / p);
                unit_direction(rng, out);
                out.iter_mut().for_each(|v| *v *= r);
            }
            PriorFamily::UniformBall { radius } => {
                let u: f64 = rng.random();
                let r = radius * u.powf(1.0 / k as f64);
                unit_direction(rng, out);
                out.iter_mut().for_each(|v| *v *= r);
            }
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn unit_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let n = norm(out);
        if n > 1e-300 {
            out.iter_mut().for_each(|v| *v /= n);
            return;
        }
    }
}

/// `ln c_p` for the density `c_p exp(−‖x‖^p / p)` on `R^K`:
/// `−ln(S_{K−1} p^{K/p−1} Γ(K/p))` with `S_{K−1} = 2π^{K/2}/Γ(K/2)`.
pub fn gen_gauss_log_normalizer(p: f64, k: usize) -> f64 {
    let k = k as f64;
    let ln_sphere = 2f64.ln() + 0.5 * k * PI.ln() - ln_gamma(0.5 * k);
    -(ln_sphere + (k / p - 1.0) * p.ln() + ln_gamma(k / p))
}

/// Per-coordinate variance `σ² = p^{2/p} Γ((K+2)/p) / (K Γ(K/p))`.
pub fn gen_gauss_covariance(p: f64, k: usize) -> Result<f64> {
    check_exponent(p)?;
    check_dimension(k)?;
    let kf = k as f64;
    Ok((2.0 / p * p.ln() + ln_gamma((kf + 2.0) / p) - kf.ln() - ln_gamma(kf / p)).exp())
}

/// Trace of the Fisher information, `p^{(2p−2)/p} Γ((K+2p−2)/p) / Γ(K/p)`.
pub fn gen_gauss_fisher(p: f64, k: usize) -> Result<f64> {
    check_exponent(p)?;
    check_dimension(k)?;
    let kf = k as f64;
    let arg = (kf + 2.0 * p - 2.0) / p;
    if arg <= 0.0 {
        return Err(Error::FisherUndefined);
    }
    Ok(((2.0 * p - 2.0) / p * p.ln() + ln_gamma(arg) - ln_gamma(kf / p)).exp())
}

/// KL divergence from the generalized Gaussian to its moment-matched
/// Gaussian:
/// `K/2 − K/p − (K/p) ln p − (K/2 ln π + ln Γ(K/p+1) − ln Γ(K/2+1)) + K/2 ln(2π σ²)`.
pub fn gen_gauss_epsilon(p: f64, k: usize) -> Result<f64> {
    let sigma2 = gen_gauss_covariance(p, k)?;
    if p == 2.0 {
        // all terms cancel analytically
        return Ok(0.0);
    }
    let n = k as f64;
    let raw = 0.5 * n - n / p - n / p * p.ln()
        - (0.5 * n * PI.ln() + ln_gamma(n / p + 1.0) - ln_gamma(0.5 * n + 1.0))
        + 0.5 * n * (2.0 * PI * sigma2).ln();
    if raw < -1e-12 {
        log::warn!("generalized Gaussian KL evaluated to {raw} at p = {p}, K = {k}; clamped to 0");
    }
    Ok(raw.max(0.0))
}

/// Mean 0, covariance `R²/(K+2) I`, no Fisher information.
pub fn uniform_ball_moments(radius: f64, k: usize) -> Result<PriorMoments> {
    Ok(PriorMoments {
        mean: vec![0.0; k],
        covariance: Matrix::scaled_identity(k, radius * radius / (k as f64 + 2.0)),
        fisher: None,
        epsilon_to_best_gaussian: Some(uniform_ball_epsilon(radius, k)?),
    })
}

/// `−ln V_K(R) + (K/2) ln(2π R²/(K+2)) + K/2`; independent of `R`.
pub fn uniform_ball_epsilon(radius: f64, k: usize) -> Result<f64> {
    PriorSpec::uniform_ball(radius, k)?;
    let kf = k as f64;
    // R^K cancels between the two terms; evaluated at R = 1
    let ln_volume = 0.5 * kf * PI.ln() - ln_gamma(0.5 * kf + 1.0);
    Ok(-ln_volume + 0.5 * kf * (2.0 * PI / (kf + 2.0)).ln() + 0.5 * kf)
}

/// Sample mean and `1/n` sample covariance of the rows of `samples`.
pub fn moment_match(samples: &Matrix<f64>) -> Result<GaussianReference<f64>> {
    let (n, k) = (samples.rows(), samples.cols());
    if k == 0 || n < k + 1 {
        return Err(Error::DegenerateSample);
    }
    let mut mean = vec![0.0; k];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(samples.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = Matrix::<f64>::zeros(k, k);
    for i in 0..n {
        let row = samples.row(i);
        for a in 0..k {
            let da = row[a] - mean[a];
            for b in 0..=a {
                cov[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..k {
        for b in 0..=a {
            let v = cov[(a, b)] / n as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let floor = 1e-12 * cov.trace() / k as f64;
    let chol = Cholesky::factor(&cov).ok_or(Error::DegenerateSample)?;
    let min_pivot = (0..k)
        .map(|i| chol.lower()[(i, i)].powi(2))
        .fold(f64::INFINITY, f64::min);
    if !(floor > 0.0) || min_pivot < floor {
        return Err(Error::DegenerateSample);
    }
    GaussianReference::new(mean, cov)
}

/// `n` draws as the rows of an `n × K` matrix; deterministic in `seed`.
pub fn sample_prior(spec: &PriorSpec, n: usize, seed: u64) -> Matrix<f64> {
    let k = spec.dimension();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut data = vec![0.0; n * k];
    for row in data.chunks_mut(k) {
        spec.draw(&mut rng, row);
    }
    Matrix::new(n, k, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_case_of_generalized_family() {
        for k in [1, 3] {
            assert!((gen_gauss_covariance(2.0, k).unwrap() - 1.0).abs() < 1e-13);
            assert!((gen_gauss_fisher(2.0, k).unwrap() - k as f64).abs() < 1e-12);
            assert_eq!(gen_gauss_epsilon(2.0, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn laplace_case_by_hand() {
        // K = 1, p = 1: density e^{−|x|}/2, variance 2, Fisher 1
        assert!((gen_gauss_covariance(1.0, 1).unwrap() - 2.0).abs() < 1e-13);
        assert!((gen_gauss_fisher(1.0, 1).unwrap() - 1.0).abs() < 1e-13);
        // h(Laplace) = 1 + ln 2, h(N(0,2)) = ½ ln(4πe)
        let expected = 0.5 * (4.0 * PI * std::f64::consts::E).ln() - 1.0 - 2f64.ln();
        assert!((gen_gauss_epsilon(1.0, 1).unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn fisher_undefined_below_threshold() {
        assert!(matches!(gen_gauss_fisher(0.5, 1), Err(Error::FisherUndefined)));
        assert!(gen_gauss_fisher(0.51, 1).is_ok());
        assert!(gen_gauss_fisher(0.51, 3).is_ok());
    }

    #[test]
    fn epsilon_nonnegative_and_minimal_at_two() {
        for k in 1..=8 {
            let mut at_two = f64::NAN;
            let mut min = f64::INFINITY;
            for i in 0..=40 {
                // log grid over [0.2, 20] that hits 2 exactly at i = 20
                let p = if i == 20 { 2.0 } else { 2.0 * 10f64.powf((i as f64 - 20.0) / 20.0) };
                let e = gen_gauss_epsilon(p, k).unwrap();
                assert!(e >= 0.0);
                min = min.min(e);
                if p == 2.0 {
                    at_two = e;
                }
            }
            let e2 = gen_gauss_epsilon(2.0, k).unwrap();
            assert!(e2 <= min);
            assert_eq!(at_two, e2);
        }
    }

    #[test]
    fn log_normalizer_integrates_to_one_in_1d() {
        for p in [1.0, 1.5, 2.0, 3.5] {
            let c = gen_gauss_log_normalizer(p, 1).exp();
            let h = 1e-3;
            let total: f64 = (-60000..=60000)
                .map(|i| {
                    let x: f64 = i as f64 * h;
                    (-x.abs().powf(p) / p).exp()
                })
                .sum::<f64>()
                * h;
            assert!((c * total - 1.0).abs() < 1e-6, "p = {p}");
        }
    }

    #[test]
    fn uniform_ball_values() {
        let m = uniform_ball_moments(1.0, 1).unwrap();
        assert!((m.covariance[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);
        assert!(m.fisher.is_none());
        let m = uniform_ball_moments(5f64.sqrt(), 3).unwrap();
        assert!((m.covariance[(0, 0)] - 1.0).abs() < 1e-14);
        let e1 = uniform_ball_epsilon(1.0, 1).unwrap();
        let expected = -(2f64.ln()) + 0.5 * (2.0 * PI / 3.0).ln() + 0.5;
        assert!((e1 - expected).abs() < 1e-14);
        assert!((e1 - 0.176_485).abs() < 1e-6);
        for k in 1..=5 {
            let a = uniform_ball_epsilon(1.0, k).unwrap();
            let b = uniform_ball_epsilon(10.0, k).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn moment_match_cases() {
        let same = Matrix::new(4, 2, vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!(matches!(moment_match(&same), Err(Error::DegenerateSample)));
        let pm = Matrix::new(2, 1, vec![3.0, -3.0]);
        let g = moment_match(&pm).unwrap();
        assert_eq!(g.mean(), &[0.0]);
        assert!((g.covariance()[(0, 0)] - 9.0).abs() < 1e-14);
    }

    #[test]
    fn sampler_is_deterministic() {
        let spec = PriorSpec::generalized_gaussian(0.7, 3).unwrap();
        assert_eq!(sample_prior(&spec, 50, 9), sample_prior(&spec, 50, 9));
        assert_ne!(sample_prior(&spec, 50, 9), sample_prior(&spec, 50, 10));
    }

    #[test]
    fn ball_samples_stay_inside() {
        let spec = PriorSpec::uniform_ball(2.5, 3).unwrap();
        let s = sample_prior(&spec, 20_000, 1);
        let mut mean_sq = 0.0;
        for i in 0..s.rows() {
            let r = norm(s.row(i));
            assert!(r <= 2.5);
            mean_sq += r * r;
        }
        mean_sq /= s.rows() as f64;
        // E‖x‖² = K R² / (K + 2)
        assert!((mean_sq - 3.0 * 6.25 / 5.0).abs() < 0.05);
    }

    #[test]
    fn invalid_specs() {
        assert!(PriorSpec::generalized_gaussian(0.0, 3).is_err());
        assert!(PriorSpec::generalized_gaussian(1.0, 0).is_err());
        assert!(PriorSpec::uniform_ball(-1.0, 3).is_err());
    }
}
