//! Extremal Gaussian priors in the KL ball.
//!
//! For a multiplier `α` the candidate covariance solves
//! `Σ_X⁻¹ = Σ_0⁻¹ − α Σ_j λ_j W_jᵀ W_j`, with `W_j` the gain for `Σ_X`
//! ([`sigma_of_alpha`]). The bound picks the `α` that makes the KL
//! constraint active: `α ≥ 0` for the upper bound, `α ≤ 0` for the lower.
//!
//! [`solve_bound`] first brackets `α` geometrically and refines it with a
//! safeguarded regula falsi on [`kl_gap`]. When the fixed-point iteration
//! stops converging before the radius is reached (which happens close to a
//! fold of the solution curve, or for large positive `α`), it switches to
//! a predictor-corrector continuation in `ε` on the joint system for
//! `(Σ_X, α)`, which follows the same branch past the fold.

use crate::analytics::{kl_with_reference_factor, weighted_mmse_sum, MmseSummary};
use crate::channel::{ChannelEnsemble, GaussianReference, Problem};
use crate::error::{Error, Result};
use crate::linalg::{solve_dense, Cholesky, Matrix};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Upper,
    Lower,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Upper => "upper",
            Direction::Lower => "lower",
        }
    }

    fn sign<T: Scalar>(self) -> T {
        match self {
            Direction::Upper => T::one(),
            Direction::Lower => -T::one(),
        }
    }
}

/// How a [`BoundResult`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// `ε = 0`: the reference itself.
    Nominal,
    Bisection,
    Continuation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    pub inner_tol: T,
    pub inner_max_iter: usize,
    pub outer_tol: T,
    pub outer_max_iter: usize,
    pub damping: T,
}

impl<T: Scalar> Default for SolverOptions<T> {
    /// `1e-11` / `1e-10` in double precision; loosened to a small multiple
    /// of machine epsilon for narrower types.
    fn default() -> Self {
        let eps = T::epsilon();
        Self {
            inner_tol: T::lit(1e-11).max(eps * T::lit(64.0)),
            inner_max_iter: 500,
            outer_tol: T::lit(1e-10).max(eps * T::lit(64.0)),
            outer_max_iter: 200,
            damping: T::one(),
        }
    }
}

impl<T: Scalar> SolverOptions<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.inner_tol > T::zero()
            && self.outer_tol > T::zero()
            && self.inner_max_iter >= 1
            && self.outer_max_iter >= 1
            && self.damping > T::zero()
            && self.damping <= T::one();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("solver options {self:?}")))
        }
    }
}

/// Output of [`sigma_of_alpha`]. `residual` is the relative Frobenius
/// change the fixed-point map applies to `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint<T> {
    pub sigma: Matrix<T>,
    pub residual: T,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult<T> {
    pub direction: Direction,
    pub alpha: T,
    pub sigma_x: Matrix<T>,
    pub bound_value: T,
    pub summary: MmseSummary<T>,
    pub kl_at_solution: T,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    pub fixed_point_residual: T,
    pub kl_residual: T,
    pub method: SolveMethod,
}

/// `Σ_j λ_j W_jᵀ W_j`, the gradient of the weighted MMSE sum with respect
/// to the prior covariance.
pub fn gradient_matrix<T: Scalar>(sigma: &Matrix<T>, ensemble: &ChannelEnsemble<T>) -> Result<Matrix<T>> {
    let k = ensemble.dimension();
    let mut m = Matrix::zeros(k, k);
    for ch in ensemble.channels() {
        let chol = Cholesky::factor(&(sigma + &ch.noise_covariance)).ok_or(Error::SingularSum)?;
        let wt = chol.solve(&ch.noise_covariance);
        let term = &wt * &wt.transpose();
        m = &m + &term.scale(ch.weight);
    }
    Ok(m.symmetrize())
}

/// One application of `Σ ↦ (Σ_0⁻¹ − α M(Σ))⁻¹`.
fn fixed_point_map<T: Scalar>(
    alpha: T,
    sigma: &Matrix<T>,
    ensemble: &ChannelEnsemble<T>,
    reference: &GaussianReference<T>,
) -> Result<Matrix<T>> {
    let m = gradient_matrix(sigma, ensemble)?;
    let precision = reference.precision() - &m.scale(alpha);
    let chol = Cholesky::factor(&precision).ok_or(Error::LostPositiveDefiniteness {
        alpha: alpha.to_f64_lossy(),
    })?;
    Ok(chol.inverse())
}

fn relative_change<T: Scalar>(new: &Matrix<T>, old: &Matrix<T>) -> T {
    (new - old).frobenius_norm() / old.frobenius_norm()
}

/// Solves `Σ_X⁻¹ = Σ_0⁻¹ − α Σ_j λ_j W_jᵀ W_j` by damped iteration from `Σ_0`.
pub fn sigma_of_alpha<T: Scalar>(
    alpha: T,
    ensemble: &ChannelEnsemble<T>,
    reference: &GaussianReference<T>,
    opts: &SolverOptions<T>,
) -> Result<FixedPoint<T>> {
    sigma_of_alpha_from(alpha, ensemble, reference, reference.covariance(), opts)
}

/// As [`sigma_of_alpha`], starting the iteration at `start`.
pub fn sigma_of_alpha_from<T: Scalar>(
    alpha: T,
    ensemble: &ChannelEnsemble<T>,
    reference: &GaussianReference<T>,
    start: &Matrix<T>,
    opts: &SolverOptions<T>,
) -> Result<FixedPoint<T>> {
    opts.validate()?;
    if ensemble.dimension() != reference.dimension() || start.rows() != reference.dimension() {
        return Err(Error::DimensionMismatch {
            what: "fixed point start vs reference".into(),
            expected: reference.dimension(),
            found: start.rows(),
        });
    }
    if alpha == T::zero() {
        return Ok(FixedPoint {
            sigma: reference.covariance().clone(),
            residual: T::zero(),
            iterations: 1,
        });
    }
    let min_damping = T::lit(1.0 / 1024.0);
    let mut damping = opts.damping;
    let mut sigma = start.symmetrize();
    let mut previous = T::infinity();
    let mut residual = T::infinity();
    for iteration in 1..=opts.inner_max_iter {
        let next = fixed_point_map(alpha, &sigma, ensemble, reference)?;
        residual = relative_change(&next, &sigma);
        if residual <= opts.inner_tol {
            // `residual` is exactly the defect of `sigma`
            return Ok(FixedPoint {
                sigma,
                residual,
                iterations: iteration,
            });
        }
        if residual > previous && damping > min_damping {
            damping = (damping * T::lit(0.5)).max(min_damping);
        }
        previous = residual;
        sigma = if damping == T::one() {
            next
        } else {
            (&sigma.scale(T::one() - damping) + &next.scale(damping)).symmetrize()
        };
    }
    Err(Error::NoConvergence {
        stage: "covariance fixed point",
        iterations: opts.inner_max_iter,
        residual: residual.to_f64_lossy(),
    })
}

/// `D_KL(N(μ_0, Σ_X(α)) ‖ N(μ_0, Σ_0)) − ε`.
pub fn kl_gap<T: Scalar>(
    alpha: T,
    ensemble: &ChannelEnsemble<T>,
    reference: &GaussianReference<T>,
    epsilon: T,
    opts: &SolverOptions<T>,
) -> Result<T> {
    let fp = sigma_of_alpha(alpha, ensemble, reference, opts)?;
    Ok(kl_with_reference_factor(&fp.sigma, reference.factor())? - epsilon)
}

/// Relative Frobenius defect of `Σ_X = Σ_0 + α (Σ_j λ_j MMSE_jᵀ MMSE_j) (Σ_0⁻¹Σ_X)⁻¹`.
pub fn covariance_equation_residual<T: Scalar>(
    alpha: T,
    sigma: &Matrix<T>,
    ensemble: &ChannelEnsemble<T>,
    reference: &GaussianReference<T>,
) -> Result<T> {
    let k = ensemble.dimension();
    let mut acc = Matrix::zeros(k, k);
    for ch in ensemble.channels() {
        let m = crate::analytics::mmse_matrix(sigma, &ch.noise_covariance)?;
        acc = &acc + &(&m.transpose() * &m).scale(ch.weight);
    }
    let chol = Cholesky::factor(sigma).ok_or(Error::NotPositiveDefinite(
        crate::error::MatrixRole::Reference,
    ))?;
    // (Σ_0⁻¹ Σ_X)⁻¹ = Σ_X⁻¹ Σ_0
    let snr_inv = chol.solve(reference.covariance());
    let rhs = reference.covariance() + &(&acc * &snr_inv).scale(alpha);
    Ok(relative_change(&rhs, sigma))
}

#[derive(Clone)]
struct Point<T> {
    alpha: T,
    sigma: Matrix<T>,
    kl: T,
}

struct Counters {
    inner: usize,
    outer: usize,
}

fn evaluate<T: Scalar>(
    alpha: T,
    start: &Matrix<T>,
    problem: &Problem<T>,
    opts: &SolverOptions<T>,
    counters: &mut Counters,
) -> Result<Point<T>> {
    counters.outer += 1;
    let fp = sigma_of_alpha_from(alpha, problem.ensemble(), problem.reference(), start, opts)?;
    counters.inner += fp.iterations;
    let kl = kl_with_reference_factor(&fp.sigma, problem.reference().factor())?;
    Ok(Point {
        alpha,
        sigma: fp.sigma,
        kl,
    })
}

enum Phase1<T> {
    Solved(Point<T>),
    /// Fixed-point path stalled; continue from the last good point.
    Stalled(Point<T>),
}

fn is_iteration_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::LostPositiveDefiniteness { .. } | Error::NoConvergence { .. }
    )
}

fn bracket_and_refine<T: Scalar>(
    direction: Direction,
    problem: &Problem<T>,
    opts: &SolverOptions<T>,
    counters: &mut Counters,
) -> Result<Phase1<T>> {
    let eps = problem.epsilon();
    let reference = problem.reference();
    let sign: T = direction.sign();
    let m0 = gradient_matrix(reference.covariance(), problem.ensemble())?;
    let alpha0 = sign * T::lit(1e-3) * reference.precision().frobenius_norm() / m0.frobenius_norm();

    let mut lo = Point {
        alpha: T::zero(),
        sigma: reference.covariance().clone(),
        kl: T::zero(),
    };
    let mut hi: Option<Point<T>> = None;
    // alpha known to fail, between lo and it the search shrinks
    let mut fail: Option<T> = None;

    for _ in 0..opts.outer_max_iter {
        let alpha = match fail {
            Some(f) => (lo.alpha + f) * T::lit(0.5),
            None if lo.alpha == T::zero() => alpha0,
            None => lo.alpha * T::lit(2.0),
        };
        if let Some(f) = fail {
            if (f - lo.alpha).abs() <= T::epsilon() * T::lit(16.0) * lo.alpha.abs() {
                break;
            }
        }
        match evaluate(alpha, &lo.sigma, problem, opts, counters) {
            Ok(p) if p.kl >= eps => {
                hi = Some(p);
                break;
            }
            Ok(p) => {
                if p.kl < lo.kl {
                    log::warn!(
                        "{} bound: KL not monotone in alpha ({} at {} vs {} at {})",
                        direction.name(),
                        p.kl,
                        p.alpha,
                        lo.kl,
                        lo.alpha
                    );
                    return Ok(Phase1::Stalled(lo));
                }
                lo = p;
            }
            Err(e) if is_iteration_failure(&e) => fail = Some(alpha),
            Err(e) => return Err(e),
        }
    }
    let Some(mut hi) = hi else {
        return Ok(Phase1::Stalled(lo));
    };

    // Illinois-modified regula falsi on g(α) = KL(α) − ε, bracket kept.
    let (mut g_lo, mut g_hi) = (lo.kl - eps, hi.kl - eps);
    if g_hi.abs() <= opts.outer_tol {
        return Ok(Phase1::Solved(hi));
    }
    let mut side = 0i8;
    for iter in 0..opts.outer_max_iter {
        let width = hi.alpha - lo.alpha;
        let mut alpha = lo.alpha - g_lo * width / (g_hi - g_lo);
        // plain bisection every few steps and when the secant leaves the bracket
        let inside = (alpha - lo.alpha) * (alpha - hi.alpha) < T::zero();
        if !inside || iter % 4 == 3 {
            alpha = (lo.alpha + hi.alpha) * T::lit(0.5);
        }
        if alpha == lo.alpha || alpha == hi.alpha {
            break;
        }
        let start = if g_hi.abs() < g_lo.abs() { &hi.sigma } else { &lo.sigma };
        let p = match evaluate(alpha, &start.clone(), problem, opts, counters) {
            Ok(p) => p,
            Err(e) if is_iteration_failure(&e) => return Ok(Phase1::Stalled(lo)),
            Err(e) => return Err(e),
        };
        let g = p.kl - eps;
        if g.abs() <= opts.outer_tol {
            return Ok(Phase1::Solved(p));
        }
        if g < T::zero() {
            if g < g_lo {
                return Ok(Phase1::Stalled(lo));
            }
            lo = p;
            g_lo = g;
            if side == -1 {
                g_hi = g_hi * T::lit(0.5);
            }
            side = -1;
        } else {
            hi = p;
            g_hi = g;
            if side == 1 {
                g_lo = g_lo * T::lit(0.5);
            }
            side = 1;
        }
    }
    Ok(Phase1::Stalled(lo))
}

/// Joint system for continuation: unknowns `(vech Σ, α)`, equations
/// `vech(L_0ᵀ(Σ_0⁻¹ − α M(Σ) − Σ⁻¹)L_0) = 0` and `KL(Σ) − ε = 0`, where
/// `L_0` is the Cholesky factor of `Σ_0` (it scales the first block to be
/// dimensionless).
struct KktSystem<'a, T> {
    problem: &'a Problem<T>,
    k: usize,
}

struct KktEval<T> {
    residual: Vec<T>,
    jacobian: Matrix<T>,
}

impl<'a, T: Scalar> KktSystem<'a, T> {
    fn size(&self) -> usize {
        self.k * (self.k + 1) / 2 + 1
    }

    fn unpack(&self, z: &[T]) -> (Matrix<T>, T) {
        let mut s = Matrix::zeros(self.k, self.k);
        let mut idx = 0;
        for i in 0..self.k {
            for j in 0..=i {
                s[(i, j)] = z[idx];
                s[(j, i)] = z[idx];
                idx += 1;
            }
        }
        (s, z[idx])
    }

    fn pack(&self, s: &Matrix<T>, alpha: T) -> Vec<T> {
        let mut z = Vec::with_capacity(self.size());
        for i in 0..self.k {
            for j in 0..=i {
                z.push(s[(i, j)]);
            }
        }
        z.push(alpha);
        z
    }

    fn vech_scaled(&self, a: &Matrix<T>, out: &mut Vec<T>) {
        let l0 = self.problem.reference().factor().lower();
        let g = &(&l0.transpose() * a) * l0;
        for i in 0..self.k {
            for j in 0..=i {
                out.push(g[(i, j)]);
            }
        }
    }

    /// Residual and analytic Jacobian at `z`; `None` when `Σ` is not PD.
    fn eval(&self, z: &[T], epsilon: T, with_jacobian: bool) -> Option<KktEval<T>> {
        let (sigma, alpha) = self.unpack(z);
        let reference = self.problem.reference();
        let chol = Cholesky::factor(&sigma)?;
        let sigma_inv = chol.inverse();
        let mut gains = Vec::new();
        let mut m = Matrix::zeros(self.k, self.k);
        for ch in self.problem.ensemble().channels() {
            let sum_inv = Cholesky::factor(&(&sigma + &ch.noise_covariance))?.inverse();
            let w = &ch.noise_covariance * &sum_inv;
            m = &m + &(&w.transpose() * &w).scale(ch.weight);
            gains.push((w, sum_inv, ch.weight));
        }
        let precision_defect = &(reference.precision() - &m.scale(alpha)) - &sigma_inv;
        let mut residual = Vec::with_capacity(self.size());
        self.vech_scaled(&precision_defect, &mut residual);
        let kl = kl_with_reference_factor(&sigma, reference.factor()).ok()?;
        residual.push(kl - epsilon);
        if !residual.iter().all(|v| v.is_finite()) {
            return None;
        }

        let n = self.size();
        let mut jacobian = Matrix::zeros(n, n);
        if with_jacobian {
            let kl_grad = (reference.precision() - &sigma_inv).scale(T::lit(0.5));
            let mut col = 0;
            let mut column = Vec::with_capacity(n);
            for a in 0..self.k {
                for b in 0..=a {
                    let mut e = Matrix::zeros(self.k, self.k);
                    e[(a, b)] = T::one();
                    e[(b, a)] = T::one();
                    // d(−Σ⁻¹) = Σ⁻¹ E Σ⁻¹, dW = −W E (Σ+N)⁻¹
                    let mut d = &(&sigma_inv * &e) * &sigma_inv;
                    let mut dm = Matrix::zeros(self.k, self.k);
                    for (w, sum_inv, weight) in &gains {
                        let dw = (&(w * &e) * sum_inv).scale(-T::one());
                        let t = &(&dw.transpose() * w) + &(&w.transpose() * &dw);
                        dm = &dm + &t.scale(*weight);
                    }
                    d = &d - &dm.scale(alpha);
                    column.clear();
                    self.vech_scaled(&d, &mut column);
                    column.push(kl_grad.trace_of_product(&e));
                    for (row, v) in column.iter().enumerate() {
                        jacobian[(row, col)] = *v;
                    }
                    col += 1;
                }
            }
            column.clear();
            self.vech_scaled(&m.scale(-T::one()), &mut column);
            column.push(T::zero());
            for (row, v) in column.iter().enumerate() {
                jacobian[(row, col)] = *v;
            }
        }
        Some(KktEval { residual, jacobian })
    }
}

fn max_abs<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

fn continuation<T: Scalar>(
    direction: Direction,
    problem: &Problem<T>,
    start: Point<T>,
    opts: &SolverOptions<T>,
    counters: &mut Counters,
) -> Result<Point<T>> {
    let eps = problem.epsilon();
    let sign: T = direction.sign();
    let sys = KktSystem {
        problem,
        k: problem.dimension(),
    };
    let n = sys.size();

    // need a point off α = 0, where the KL is flat
    let mut current = if start.alpha == T::zero() {
        let m0 = gradient_matrix(problem.reference().covariance(), problem.ensemble())?;
        let alpha0 = sign * T::lit(1e-4) * problem.reference().precision().frobenius_norm()
            / m0.frobenius_norm();
        evaluate(alpha0, &start.sigma, problem, opts, counters)?
    } else {
        start
    };
    let mut best = current.clone();
    let fail = |best: &Point<T>| Error::BracketFailure {
        direction: direction.name(),
        epsilon: eps.to_f64_lossy(),
        max_alpha: best.alpha.to_f64_lossy(),
        max_kl: best.kl.to_f64_lossy(),
    };
    let mut z = sys.pack(&current.sigma, current.alpha);
    let mut e = current.kl;
    let mut step = ((eps - e) / T::lit(16.0)).abs().max(e.abs());
    let min_step = T::epsilon() * T::lit(16.0) * eps;
    let corrector_tol_fp = opts.inner_tol * T::lit(0.01);
    let corrector_tol_kl = opts.outer_tol * T::lit(0.01);
    let max_steps = 50 * opts.outer_max_iter;

    for _ in 0..max_steps {
        if (e - eps).abs() <= corrector_tol_kl {
            break;
        }
        let target = if eps > e { (e + step).min(eps) } else { (e - step).max(eps) };
        let here = sys.eval(&z, e, true).ok_or_else(|| fail(&best))?;
        let mut rhs = vec![T::zero(); n];
        rhs[n - 1] = T::one();
        let accepted = solve_dense(&here.jacobian, &rhs).and_then(|tangent| {
            let mut trial: Vec<T> = z
                .iter()
                .zip(&tangent)
                .map(|(&zi, &ti)| zi + (target - e) * ti)
                .collect();
            newton_correct(&sys, &mut trial, target, corrector_tol_fp, corrector_tol_kl, counters)
                .map(|_| trial)
        });
        match accepted {
            Some(trial) if trial[n - 1] * sign > T::zero() => {
                z = trial;
                e = target;
                let (sigma, alpha) = sys.unpack(&z);
                current = Point {
                    alpha,
                    kl: kl_with_reference_factor(&sigma, problem.reference().factor())?,
                    sigma,
                };
                best = current.clone();
                step = step * T::lit(1.5);
            }
            _ => {
                step = step * T::lit(0.5);
                if step < min_step {
                    return Err(fail(&best));
                }
            }
        }
    }
    if (current.kl - eps).abs() > opts.outer_tol {
        return Err(fail(&best));
    }
    Ok(current)
}

fn newton_correct<T: Scalar>(
    sys: &KktSystem<'_, T>,
    z: &mut Vec<T>,
    epsilon: T,
    tol_fp: T,
    tol_kl: T,
    counters: &mut Counters,
) -> Option<()> {
    let n = z.len();
    let converged = |r: &[T]| max_abs(&r[..n - 1]) <= tol_fp && r[n - 1].abs() <= tol_kl;
    let mut current = sys.eval(z, epsilon, true)?;
    let mut norm = max_abs(&current.residual);
    for _ in 0..40 {
        counters.inner += 1;
        if converged(&current.residual) {
            return Some(());
        }
        let neg: Vec<T> = current.residual.iter().map(|&v| -v).collect();
        let delta = solve_dense(&current.jacobian, &neg)?;
        let mut scale = T::one();
        let mut next = None;
        for _ in 0..12 {
            let trial: Vec<T> = z.iter().zip(&delta).map(|(&a, &d)| a + scale * d).collect();
            if let Some(ev) = sys.eval(&trial, epsilon, true) {
                let trial_norm = max_abs(&ev.residual);
                if trial_norm < norm || converged(&ev.residual) {
                    next = Some((trial, ev, trial_norm));
                    break;
                }
            }
            scale = scale * T::lit(0.5);
        }
        let (trial, ev, trial_norm) = match next {
            Some(v) => v,
            // stagnation at rounding level counts as converged
            None if max_abs(&current.residual[..n - 1]) <= tol_fp * T::lit(100.0)
                && current.residual[n - 1].abs() <= tol_kl * T::lit(100.0) =>
            {
                return Some(())
            }
            None => return None,
        };
        *z = trial;
        current = ev;
        norm = trial_norm;
    }
    converged(&current.residual).then_some(())
}

/// Solves for the extremal Gaussian prior in the given direction.
pub fn solve_bound<T: Scalar>(
    direction: Direction,
    problem: &Problem<T>,
    opts: &SolverOptions<T>,
) -> Result<BoundResult<T>> {
    opts.validate()?;
    let eps = problem.epsilon();
    let ensemble = problem.ensemble();
    let reference = problem.reference();
    let mut counters = Counters { inner: 0, outer: 0 };

    let (point, method) = if eps == T::zero() {
        counters.inner = 1;
        (
            Point {
                alpha: T::zero(),
                sigma: reference.covariance().clone(),
                kl: T::zero(),
            },
            SolveMethod::Nominal,
        )
    } else {
        match bracket_and_refine(direction, problem, opts, &mut counters)? {
            Phase1::Solved(p) => (p, SolveMethod::Bisection),
            Phase1::Stalled(lo) => {
                log::debug!(
                    "{} bound: fixed-point path stalled at alpha {} (KL {}), switching to continuation",
                    direction.name(),
                    lo.alpha,
                    lo.kl
                );
                (
                    continuation(direction, problem, lo, opts, &mut counters)?,
                    SolveMethod::Continuation,
                )
            }
        }
    };

    let fixed_point_residual = if point.alpha == T::zero() {
        T::zero()
    } else {
        let next = fixed_point_map(point.alpha, &point.sigma, ensemble, reference)?;
        relative_change(&next, &point.sigma)
    };
    if fixed_point_residual > opts.inner_tol {
        return Err(Error::NoConvergence {
            stage: "bound solution",
            iterations: counters.inner,
            residual: fixed_point_residual.to_f64_lossy(),
        });
    }
    let summary = weighted_mmse_sum(&point.sigma, ensemble, Some(reference))?;
    Ok(BoundResult {
        direction,
        alpha: point.alpha,
        bound_value: summary.weighted_sum,
        sigma_x: point.sigma,
        summary,
        kl_at_solution: point.kl,
        inner_iterations: counters.inner,
        outer_iterations: counters.outer,
        fixed_point_residual,
        kl_residual: (point.kl - eps).abs(),
        method,
    })
}

/// [`solve_bound`] for channel `j` alone, with weight 1.
pub fn local_bound<T: Scalar>(
    direction: Direction,
    problem: &Problem<T>,
    channel: usize,
    opts: &SolverOptions<T>,
) -> Result<BoundResult<T>> {
    let single = problem.ensemble().single(channel).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "channel index {channel} out of range for {} channels",
            problem.ensemble().len()
        ))
    })?;
    solve_bound(direction, &problem.with_ensemble(single)?, opts)
}

/// `Σ_j λ_j · local_bound(j)` together with the per-channel results.
pub fn local_bounds_weighted<T: Scalar>(
    direction: Direction,
    problem: &Problem<T>,
    opts: &SolverOptions<T>,
) -> Result<(T, Vec<BoundResult<T>>)> {
    let mut total = T::zero();
    let mut results = Vec::with_capacity(problem.ensemble().len());
    for (j, ch) in problem.ensemble().channels().iter().enumerate() {
        let r = local_bound(direction, problem, j, opts)?;
        total = total + ch.weight * r.bound_value;
        results.push(r);
    }
    Ok((total, results))
}
