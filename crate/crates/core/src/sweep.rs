//! Parameter sweeps over prior families, one [`SweepRecord`] per grid point.
//!
//! `sweep_p` moves through generalized Gaussian priors with exponent `p`;
//! `sweep_ball` through uniform priors on a `K`-ball of radius `R`. In both
//! the KL ball is centered at the moment-matched Gaussian and has radius
//! equal to the prior's distance to it, so the true prior is always inside.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use crate::baselines::{cramer_rao_lower, lmmse_upper};
use crate::channel::{ChannelEnsemble, DivergenceBall, GaussianReference, Problem};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::prior::{gen_gauss_covariance, gen_gauss_epsilon, gen_gauss_fisher, uniform_ball_epsilon};
use crate::solver::{local_bounds_weighted, solve_bound, Direction, SolverOptions};

/// Relative slack allowed when checking the ordering of a record.
pub const ORDERING_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub abscissa: f64,
    pub epsilon: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub local_lower: Option<f64>,
    pub local_upper: Option<f64>,
    pub lmmse: Option<f64>,
    pub cramer_rao: Option<f64>,
}

/// A record plus the solver failures that left cells empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub record: SweepRecord,
    pub diagnostics: Vec<String>,
}

/// Covariance convention for the uniform-ball prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BallCovariance {
    /// `R²/(K+2) I`, the actual covariance.
    #[default]
    PerCoordinate,
    /// `K R²/(K+2) I`: the total second moment `E‖X‖²` on every coordinate.
    TotalSecondMoment,
}

impl SweepRecord {
    /// Checks `local_lower ≤ lower ≤ lmmse ≤ upper ≤ local_upper` and
    /// `lower ≤ upper` over the cells that are present.
    pub fn check_ordering(&self) -> std::result::Result<(), String> {
        let pairs = [
            ("local_lower", self.local_lower, "lower", self.lower),
            ("lower", self.lower, "upper", self.upper),
            ("lower", self.lower, "lmmse", self.lmmse),
            ("lmmse", self.lmmse, "upper", self.upper),
            ("upper", self.upper, "local_upper", self.local_upper),
        ];
        for (na, a, nb, b) in pairs {
            if let (Some(a), Some(b)) = (a, b) {
                if a > b + ORDERING_TOLERANCE * (1.0 + a.abs().max(b.abs())) {
                    return Err(format!(
                        "at {}: {na} = {a} exceeds {nb} = {b}",
                        self.abscissa
                    ));
                }
            }
        }
        Ok(())
    }
}

fn cell(
    value: Result<f64>,
    what: &str,
    abscissa: f64,
    diagnostics: &mut Vec<String>,
) -> Result<Option<f64>> {
    match value {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_solver_failure() => {
            diagnostics.push(format!("{what} at {abscissa}: {e}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn bounds_row(
    abscissa: f64,
    problem: &Problem<f64>,
    with_local: bool,
    fisher: Option<f64>,
    opts: &SolverOptions<f64>,
) -> Result<SweepRow> {
    let mut diagnostics = Vec::new();
    let ensemble = problem.ensemble();
    let sigma0 = problem.reference().covariance();
    let lower = solve_bound(Direction::Lower, problem, opts).map(|r| r.bound_value);
    let upper = solve_bound(Direction::Upper, problem, opts).map(|r| r.bound_value);
    let lower = cell(lower, "lower", abscissa, &mut diagnostics)?;
    let upper = cell(upper, "upper", abscissa, &mut diagnostics)?;
    let (local_lower, local_upper) = if with_local {
        let ll = local_bounds_weighted(Direction::Lower, problem, opts).map(|r| r.0);
        let lu = local_bounds_weighted(Direction::Upper, problem, opts).map(|r| r.0);
        (
            cell(ll, "local_lower", abscissa, &mut diagnostics)?,
            cell(lu, "local_upper", abscissa, &mut diagnostics)?,
        )
    } else {
        (None, None)
    };
    let cramer_rao = match fisher {
        Some(f) => Some(cramer_rao_lower(Some(f), ensemble)?),
        None => None,
    };
    let record = SweepRecord {
        abscissa,
        epsilon: problem.epsilon(),
        lower,
        upper,
        local_lower,
        local_upper,
        lmmse: Some(lmmse_upper(sigma0, ensemble)?),
        cramer_rao,
    };
    record.check_ordering().map_err(Error::OrderingViolation)?;
    Ok(SweepRow {
        record,
        diagnostics,
    })
}

fn isotropic_problem(ensemble: &ChannelEnsemble<f64>, variance: f64, epsilon: f64) -> Result<Problem<f64>> {
    let k = ensemble.dimension();
    let reference = GaussianReference::new(vec![0.0; k], Matrix::scaled_identity(k, variance))?;
    Problem::new(ensemble.clone(), DivergenceBall::new(reference, epsilon)?)
}

/// One row per `p`: reference `σ²(p) I`, radius `ε_p`, all six columns.
/// The Cramér-Rao cell is empty where the Fisher information is undefined.
pub fn sweep_p(
    ensemble: &ChannelEnsemble<f64>,
    grid: &[f64],
    opts: &SolverOptions<f64>,
) -> Result<Vec<SweepRow>> {
    let k = ensemble.dimension();
    grid.par_iter()
        .map(|&p| {
            let problem = isotropic_problem(ensemble, gen_gauss_covariance(p, k)?, gen_gauss_epsilon(p, k)?)?;
            bounds_row(p, &problem, true, gen_gauss_fisher(p, k).ok(), opts)
        })
        .collect()
}

/// One row per radius `R`: reference from the ball covariance, radius equal
/// to the ball's KL distance to it (the same for every `R`). No local or
/// Cramér-Rao columns.
pub fn sweep_ball(
    ensemble: &ChannelEnsemble<f64>,
    grid: &[f64],
    convention: BallCovariance,
    opts: &SolverOptions<f64>,
) -> Result<Vec<SweepRow>> {
    let k = ensemble.dimension();
    let kf = k as f64;
    grid.par_iter()
        .map(|&r| {
            let epsilon = uniform_ball_epsilon(r, k)?;
            let variance = match convention {
                BallCovariance::PerCoordinate => r * r / (kf + 2.0),
                BallCovariance::TotalSecondMoment => kf * r * r / (kf + 2.0),
            };
            let problem = isotropic_problem(ensemble, variance, epsilon)?;
            bounds_row(r, &problem, false, None, opts)
        })
        .collect()
}

/// Parses `start:stop:count` (inclusive, evenly spaced) or a comma list.
/// The grid must be positive and strictly increasing.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::InvalidArgument(format!("grid '{text}': {msg}"));
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| bad(format!("'{}': {e}", s.trim())))
    };
    let grid = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:count".into()));
        }
        let (start, stop) = (num(parts[0])?, num(parts[1])?);
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|e| bad(format!("count: {e}")))?;
        match count {
            0 => return Err(bad("count must be at least 1".into())),
            1 => vec![start],
            n => (0..n)
                .map(|i| {
                    if i == n - 1 {
                        stop
                    } else {
                        start + (stop - start) * i as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if grid.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(bad("values must be positive".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("values must be strictly increasing".into()));
    }
    Ok(grid)
}

/// `printf("%.15g")`.
pub fn format_g15(x: f64) -> String {
    const DIGITS: i32 = 15;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= DIGITS {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Which columns a CSV carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvLayout {
    /// `p,epsilon,lower,upper,local_lower,local_upper,lmmse,cramer_rao`
    Exponent,
    /// `R,epsilon,lower,upper,lmmse`
    Radius,
}

pub fn write_csv<W: Write>(out: &mut W, rows: &[SweepRow], layout: CsvLayout) -> std::io::Result<()> {
    let header = match layout {
        CsvLayout::Exponent => "p,epsilon,lower,upper,local_lower,local_upper,lmmse,cramer_rao",
        CsvLayout::Radius => "R,epsilon,lower,upper,lmmse",
    };
    writeln!(out, "{header}")?;
    let opt = |v: Option<f64>| v.map(format_g15).unwrap_or_default();
    for row in rows {
        let r = &row.record;
        let mut line = String::new();
        let _ = write!(line, "{},{},{},{}", format_g15(r.abscissa), format_g15(r.epsilon), opt(r.lower), opt(r.upper));
        match layout {
            CsvLayout::Exponent => {
                let _ = write!(
                    line,
                    ",{},{},{},{}",
                    opt(r.local_lower),
                    opt(r.local_upper),
                    opt(r.lmmse),
                    opt(r.cramer_rao)
                );
            }
            CsvLayout::Radius => {
                let _ = write!(line, ",{}", opt(r.lmmse));
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g15_formatting() {
        assert_eq!(format_g15(0.0), "0");
        assert_eq!(format_g15(1.0), "1");
        assert_eq!(format_g15(0.1), "0.1");
        assert_eq!(format_g15(2.5e-7), "2.5e-07");
        assert_eq!(format_g15(123456.789), "123456.789");
        assert_eq!(format_g15(1.0 / 3.0), "0.333333333333333");
        assert_eq!(format_g15(1e20), "1e+20");
        assert_eq!(format_g15(-0.0001), "-0.0001");
        assert_eq!(format_g15(9.9999999999999999), "10");
    }

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("1:3:3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_grid("0.5, 1,2").unwrap(), vec![0.5, 1.0, 2.0]);
        let g = parse_grid("0.51:10:25").unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g[24], 10.0);
        assert!((g[1] - 0.905416666666667).abs() < 1e-12);
        assert!(parse_grid("2,1").is_err());
        assert!(parse_grid("0,1").is_err());
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn ordering_violation_detected() {
        let r = SweepRecord {
            abscissa: 1.0,
            epsilon: 0.1,
            lower: Some(2.0),
            upper: Some(1.0),
            local_lower: None,
            local_upper: None,
            lmmse: None,
            cramer_rao: None,
        };
        assert!(r.check_ordering().is_err());
    }
}
