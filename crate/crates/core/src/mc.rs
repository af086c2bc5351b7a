//! Monte Carlo estimates of the true MMSE of a (possibly non-Gaussian) prior,
//! used to check the analytic bounds from the outside.
//!
//! The conditional mean `E[X | Y = y]` is computed by self-normalized
//! importance sampling. The proposal is the posterior the prior's
//! moment-matched Gaussian would give, which sits on the posterior mass for
//! the priors of interest.
//!
//! Outer draws are split into fixed chunks of [`CHUNK`] draws. Chunk `c`
//! uses a ChaCha20 generator seeded with `seed` on stream `c`, so results
//! are bit-identical however rayon schedules the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::channel::{ChannelEnsemble, GaussianReference};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::prior::PriorSpec;

pub const CHUNK: usize = 64;
pub const DEFAULT_N_OUTER: usize = 2000;
pub const DEFAULT_N_INNER: usize = 4000;
const MIN_DRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_outer: usize,
    pub n_inner: usize,
    pub seed: u64,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-channel quantities for the proposal `N(m + G(y − m), P)`.
struct ChannelProposal {
    weight: f64,
    noise: Cholesky<f64>,
    gain: Matrix<f64>,
    posterior: Cholesky<f64>,
}

impl ChannelProposal {
    fn new(matched: &GaussianReference<f64>, sigma_n: &Matrix<f64>, weight: f64) -> Result<Self> {
        let c = matched.covariance();
        let sum = Cholesky::factor(&(c + sigma_n)).ok_or(Error::SingularSum)?;
        // G = C (C+N)⁻¹, P = C (C+N)⁻¹ N
        let gain = sum.solve(c).transpose();
        let posterior_cov = (&gain * sigma_n).symmetrize();
        Ok(Self {
            weight,
            noise: Cholesky::factor(sigma_n).ok_or(Error::SingularSum)?,
            gain,
            posterior: Cholesky::factor(&posterior_cov).ok_or(Error::SingularSum)?,
        })
    }
}

struct Oracle<'a> {
    spec: &'a PriorSpec,
    matched: GaussianReference<f64>,
    channels: Vec<ChannelProposal>,
    n_inner: usize,
}

/// Squared error of the conditional-mean estimate and whether its weights
/// were degenerate.
struct DrawResult {
    weighted_error: f64,
    per_channel: Vec<f64>,
    degenerate: usize,
}

impl Oracle<'_> {
    fn new<'a>(
        spec: &'a PriorSpec,
        channels: Vec<(&Matrix<f64>, f64)>,
        n_inner: usize,
    ) -> Result<Oracle<'a>> {
        let matched = spec.matched_gaussian()?;
        let channels = channels
            .into_iter()
            .map(|(n, w)| ChannelProposal::new(&matched, n, w))
            .collect::<Result<Vec<_>>>()?;
        Ok(Oracle {
            spec,
            matched,
            channels,
            n_inner,
        })
    }

    fn one_draw(&self, rng: &mut ChaCha20Rng, buf: &mut Workspace) -> DrawResult {
        let k = self.spec.dimension();
        self.spec.draw(rng, &mut buf.x);
        let mut weighted_error = 0.0;
        let mut per_channel = Vec::with_capacity(self.channels.len());
        let mut degenerate = 0;
        for ch in &self.channels {
            let noise: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
            let colored = lower_times(ch.noise.lower(), &noise);
            let y: Vec<f64> = buf.x.iter().zip(&colored).map(|(a, b)| a + b).collect();
            let centered: Vec<f64> = y.iter().zip(self.matched.mean()).map(|(a, b)| a - b).collect();
            let shift = ch.gain.mul_vec(&centered);
            let post_mean: Vec<f64> = self.matched.mean().iter().zip(&shift).map(|(a, b)| a + b).collect();

            buf.log_w.clear();
            buf.samples.clear();
            for _ in 0..self.n_inner {
                for z in buf.z.iter_mut() {
                    *z = StandardNormal.sample(rng);
                }
                let step = lower_times(ch.posterior.lower(), &buf.z);
                let xi: Vec<f64> = post_mean.iter().zip(&step).map(|(a, b)| a + b).collect();
                let resid: Vec<f64> = y.iter().zip(&xi).map(|(a, b)| a - b).collect();
                // constants common to all inner draws cancel in the normalization
                let log_q = -0.5 * buf.z.iter().map(|v| v * v).sum::<f64>();
                let log_noise = -0.5 * ch.noise.inv_quad_form(&resid);
                buf.log_w.push(self.spec.log_density(&xi) + log_noise - log_q);
                buf.samples.extend_from_slice(&xi);
            }
            let max = buf.log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut estimate = vec![0.0; k];
            let (mut sum_w, mut sum_w2) = (0.0, 0.0);
            if max.is_finite() {
                for (i, lw) in buf.log_w.iter().enumerate() {
                    let w = (lw - max).exp();
                    sum_w += w;
                    sum_w2 += w * w;
                    for (e, s) in estimate.iter_mut().zip(&buf.samples[i * k..(i + 1) * k]) {
                        *e += w * s;
                    }
                }
                estimate.iter_mut().for_each(|e| *e /= sum_w);
            } else {
                estimate.copy_from_slice(&post_mean);
            }
            let ess = if sum_w2 > 0.0 { sum_w * sum_w / sum_w2 } else { 0.0 };
            if ess < 0.01 * self.n_inner as f64 {
                degenerate += 1;
            }
            let err: f64 = estimate.iter().zip(&buf.x).map(|(a, b)| (a - b).powi(2)).sum();
            weighted_error += ch.weight * err;
            per_channel.push(err);
        }
        DrawResult {
            weighted_error,
            per_channel,
            degenerate,
        }
    }

    fn run(&self, n_outer: usize, seed: u64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let k = self.spec.dimension();
        let chunks: Vec<Vec<DrawResult>> = (0..n_outer.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                rng.set_stream(c as u64);
                let mut buf = Workspace::new(k, self.n_inner);
                let len = CHUNK.min(n_outer - c * CHUNK);
                (0..len).map(|_| self.one_draw(&mut rng, &mut buf)).collect()
            })
            .collect();
        let draws: Vec<DrawResult> = chunks.into_iter().flatten().collect();
        let degenerate: usize = draws.iter().map(|d| d.degenerate).sum();
        let fraction = degenerate as f64 / (draws.len() * self.channels.len()) as f64;
        if fraction > 0.01 {
            return Err(Error::DegenerateWeights { fraction });
        }
        let per_channel = (0..self.channels.len())
            .map(|j| draws.iter().map(|d| d.per_channel[j]).collect())
            .collect();
        Ok((draws.iter().map(|d| d.weighted_error).collect(), per_channel))
    }
}

struct Workspace {
    x: Vec<f64>,
    z: Vec<f64>,
    log_w: Vec<f64>,
    samples: Vec<f64>,
}

impl Workspace {
    fn new(k: usize, n_inner: usize) -> Self {
        Self {
            x: vec![0.0; k],
            z: vec![0.0; k],
            log_w: Vec::with_capacity(n_inner),
            samples: Vec::with_capacity(n_inner * k),
        }
    }
}

fn lower_times(l: &Matrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..v.len())
        .map(|i| (0..=i).map(|j| l[(i, j)] * v[j]).sum())
        .collect()
}

fn check_counts(n_outer: usize, n_inner: usize) -> Result<()> {
    if n_outer < MIN_DRAWS || n_inner < MIN_DRAWS {
        return Err(Error::InvalidArgument(format!(
            "n_outer = {n_outer} and n_inner = {n_inner} must both be at least {MIN_DRAWS}"
        )));
    }
    Ok(())
}

fn check_dimension(spec: &PriorSpec, k: usize) -> Result<()> {
    if spec.dimension() != k {
        return Err(Error::DimensionMismatch {
            what: "prior vs noise covariance".into(),
            expected: spec.dimension(),
            found: k,
        });
    }
    Ok(())
}

/// `E‖E[X|Y] − X‖²` for `Y = X + N`, `N ~ N(0, sigma_n)`.
pub fn mc_mmse(
    spec: &PriorSpec,
    sigma_n: &Matrix<f64>,
    n_outer: usize,
    n_inner: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_counts(n_outer, n_inner)?;
    check_dimension(spec, sigma_n.rows())?;
    let oracle = Oracle::new(spec, vec![(sigma_n, 1.0)], n_inner)?;
    let (values, _) = oracle.run(n_outer, seed)?;
    let (value, std_error) = mean_and_se(&values);
    Ok(McEstimate {
        value,
        std_error,
        n_outer,
        n_inner,
        seed,
    })
}

/// Total and per-channel estimates from [`mc_weighted_sum_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMcEstimate {
    pub total: McEstimate,
    pub per_channel: Vec<McEstimate>,
}

/// `Σ_j λ_j mmse_j` with the same outer draws of `X` for every channel. The
/// standard error comes from the per-draw weighted sums, so it accounts for
/// the correlation the shared draws introduce.
pub fn mc_weighted_sum(
    spec: &PriorSpec,
    ensemble: &ChannelEnsemble<f64>,
    n_outer: usize,
    n_inner: usize,
    seed: u64,
) -> Result<McEstimate> {
    Ok(mc_weighted_sum_detailed(spec, ensemble, n_outer, n_inner, seed)?.total)
}

pub fn mc_weighted_sum_detailed(
    spec: &PriorSpec,
    ensemble: &ChannelEnsemble<f64>,
    n_outer: usize,
    n_inner: usize,
    seed: u64,
) -> Result<WeightedMcEstimate> {
    check_counts(n_outer, n_inner)?;
    check_dimension(spec, ensemble.dimension())?;
    let channels = ensemble
        .channels()
        .iter()
        .map(|c| (&c.noise_covariance, c.weight))
        .collect();
    let oracle = Oracle::new(spec, channels, n_inner)?;
    let (values, per_channel) = oracle.run(n_outer, seed)?;
    let make = |v: &[f64]| {
        let (value, std_error) = mean_and_se(v);
        McEstimate {
            value,
            std_error,
            n_outer,
            n_inner,
            seed,
        }
    };
    Ok(WeightedMcEstimate {
        total: make(&values),
        per_channel: per_channel.iter().map(|v| make(v)).collect(),
    })
}

/// `D_KL(P ‖ gaussian)` as the sample mean of the log-density ratio under `P`.
pub fn mc_kl(
    spec: &PriorSpec,
    gaussian: &GaussianReference<f64>,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {n}")));
    }
    check_dimension(spec, gaussian.dimension())?;
    let k = spec.dimension();
    let chunk = 4096;
    let values: Vec<f64> = (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut x = vec![0.0; k];
            let len = chunk.min(n - c * chunk);
            (0..len)
                .map(|_| {
                    spec.draw(&mut rng, &mut x);
                    spec.log_density(&x) - gaussian.log_density(&x)
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect();
    let (value, std_error) = mean_and_se(&values);
    Ok(McEstimate {
        value,
        std_error,
        n_outer: n,
        n_inner: 0,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_mmse_matches_closed_form() {
        let spec = PriorSpec::gaussian(GaussianReference::new(vec![0.0; 3], Matrix::identity(3)).unwrap());
        let est = mc_mmse(&spec, &Matrix::identity(3), 1000, 400, 3).unwrap();
        assert!((est.value - 1.5).abs() < 4.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let spec = PriorSpec::generalized_gaussian(1.0, 2).unwrap();
        let n = Matrix::from_diagonal(&[1.0, 2.0]);
        let a = mc_mmse(&spec, &n, 200, 200, 11).unwrap();
        let b = mc_mmse(&spec, &n, 200, 200, 11).unwrap();
        assert_eq!(a, b);
        let c = mc_mmse(&spec, &n, 200, 200, 12).unwrap();
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn too_few_draws_rejected() {
        let spec = PriorSpec::generalized_gaussian(1.0, 1).unwrap();
        assert!(matches!(
            mc_mmse(&spec, &Matrix::identity(1), 10, 1000, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn kl_to_itself_is_zero() {
        let g = GaussianReference::new(vec![1.0, -1.0], Matrix::from_diagonal(&[2.0, 0.5])).unwrap();
        let spec = PriorSpec::gaussian(g.clone());
        let est = mc_kl(&spec, &g, 1000, 5).unwrap();
        assert_eq!(est.value, 0.0);
    }
}
