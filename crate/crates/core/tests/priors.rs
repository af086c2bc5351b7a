//! Prior library cross-checked by sampling.

use wmmse_core::mc::mc_kl;
use wmmse_core::prior::{gen_gauss_covariance, moment_match, sample_prior, PriorSpec};
use wmmse_core::{GaussianReference, Matrix};

fn sample_moments(s: &Matrix) -> (Vec<f64>, Matrix) {
    let g = moment_match(s).unwrap();
    (g.mean().to_vec(), g.covariance().clone())
}

#[test]
fn gen_gauss_variance_by_sampling() {
    let n = 1_000_000;
    let spec = PriorSpec::generalized_gaussian(0.51, 3).unwrap();
    let s = sample_prior(&spec, n, 1);
    let sq: Vec<f64> = (0..n).map(|i| s.row(i).iter().map(|v| v * v).sum::<f64>() / 3.0).collect();
    let mean = sq.iter().sum::<f64>() / n as f64;
    let sd = (sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let se = sd / (n as f64).sqrt();
    let exact = gen_gauss_covariance(0.51, 3).unwrap();
    assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");
}

#[test]
fn p_two_samples_are_standard_normal() {
    let n = 200_000;
    let s = sample_prior(&PriorSpec::generalized_gaussian(2.0, 3).unwrap(), n, 2);
    let (_, cov) = sample_moments(&s);
    assert!((&cov - &Matrix::identity(3)).frobenius_norm() < 0.02);
    for c in 0..3 {
        let m4: Vec<f64> = (0..n).map(|i| s.row(i)[c].powi(4)).collect();
        let mean = m4.iter().sum::<f64>() / n as f64;
        let sd = (m4.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((mean - 3.0).abs() < 3.0 * sd / (n as f64).sqrt());
    }
}

#[test]
fn gaussian_sampler_and_moment_match() {
    let n = 1_000_000;
    let g = GaussianReference::new(vec![0.0; 3], Matrix::identity(3)).unwrap();
    let s = sample_prior(&PriorSpec::gaussian(g), n, 3);
    let (_, cov) = sample_moments(&s);
    assert!((&cov - &Matrix::identity(3)).frobenius_norm() < 0.01);
}

#[test]
fn moment_match_round_trip_per_family() {
    let n = 100_000;
    let bound = 5.0 / (n as f64).sqrt();
    let specs = [
        PriorSpec::generalized_gaussian(1.0, 2).unwrap(),
        PriorSpec::generalized_gaussian(3.0, 3).unwrap(),
        PriorSpec::uniform_ball(5f64.sqrt(), 3).unwrap(),
    ];
    for (i, spec) in specs.iter().enumerate() {
        let (_, cov) = sample_moments(&sample_prior(spec, n, 10 + i as u64));
        let exact = spec.moments().unwrap().covariance;
        let err = (&cov - &exact).frobenius_norm() / exact.frobenius_norm();
        assert!(err < bound, "{:?}: {err}", spec.family());
    }
}

#[test]
fn uniform_ball_unit_variance_at_sqrt5() {
    let s = sample_prior(&PriorSpec::uniform_ball(5f64.sqrt(), 3).unwrap(), 1_000_000, 4);
    let (_, cov) = sample_moments(&s);
    assert!((&cov - &Matrix::identity(3)).frobenius_norm() < 0.01);
}

#[test]
fn closed_form_kl_matches_sampling() {
    let cases = [
        PriorSpec::generalized_gaussian(0.51, 3).unwrap(),
        PriorSpec::generalized_gaussian(1.0, 1).unwrap(),
        PriorSpec::generalized_gaussian(3.0, 2).unwrap(),
        PriorSpec::uniform_ball(1.0, 1).unwrap(),
        PriorSpec::uniform_ball(4.0, 3).unwrap(),
    ];
    for (i, spec) in cases.iter().enumerate() {
        let exact = spec.moments().unwrap().epsilon_to_best_gaussian.unwrap();
        let est = mc_kl(spec, &spec.matched_gaussian().unwrap(), 400_000, 100 + i as u64).unwrap();
        assert!((est.value - exact).abs() < 3.0 * est.std_error, "{:?}: {} vs {exact}", spec.family(), est.value);
    }
}

#[test]
fn p_two_kl_against_standard_normal_is_zero() {
    let spec = PriorSpec::generalized_gaussian(2.0, 3).unwrap();
    let g = GaussianReference::new(vec![0.0; 3], Matrix::identity(3)).unwrap();
    let est = mc_kl(&spec, &g, 100_000, 5).unwrap();
    assert!(est.value.abs() < 1e-12);
}
