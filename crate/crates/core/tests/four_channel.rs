//! Bounds for the four-channel, three-dimensional test ensemble.
//!
//! Reference optima were computed independently of this crate by
//! maximizing / minimizing the weighted MMSE sum directly over covariance
//! Cholesky factors with an SQP solver under the KL constraint (multiple
//! restarts), and are frozen here.

mod common;

use common::*;
use wmmse_core::prior::{gen_gauss_covariance, gen_gauss_epsilon, gen_gauss_fisher};
use wmmse_core::solver::covariance_equation_residual;
use wmmse_core::{cramer_rao_lower, lmmse_upper, solve_bound, Direction, SolverOptions};

struct Reference {
    p: f64,
    epsilon: f64,
    variance: f64,
    fisher: f64,
    lower: f64,
    upper: f64,
    nominal: f64,
}

const REFERENCES: [Reference; 4] = [
    Reference {
        p: 0.51,
        epsilon: 0.595600387995216,
        variance: 56.5501603855313,
        fisher: 0.211942753929501,
        lower: 14.7818631962,
        upper: 20.1322578679,
        nominal: 18.9199113647,
    },
    Reference {
        p: 1.0,
        epsilon: 0.112085713764619,
        variance: 4.0,
        fisher: 1.0,
        lower: 6.67441284636,
        upper: 10.3585892714,
        nominal: 8.57752720183,
    },
    Reference {
        p: 3.0,
        epsilon: 0.0230129588697112,
        variance: 0.625928626734496,
        fisher: 5.15159726741628,
        lower: 2.05853607668,
        upper: 2.74800335147,
        nominal: 2.39217653702,
    },
    Reference {
        p: 10.0,
        epsilon: 0.199510439978469,
        variance: 0.313007438996422,
        fisher: 22.0716264169196,
        lower: 0.810453884316,
        upper: 2.01675088673,
        nominal: 1.34036194796,
    },
];

#[test]
fn prior_constants_match_reference() {
    for r in &REFERENCES {
        assert!(rel(gen_gauss_epsilon(r.p, 3).unwrap(), r.epsilon) < 1e-12, "p = {}", r.p);
        assert!(rel(gen_gauss_covariance(r.p, 3).unwrap(), r.variance) < 1e-12);
        assert!(rel(gen_gauss_fisher(r.p, 3).unwrap(), r.fisher) < 1e-12);
    }
}

#[test]
fn nominal_sum_matches_reference() {
    for r in &REFERENCES {
        let s0 = wmmse_core::Matrix::scaled_identity(3, r.variance);
        assert!(rel(lmmse_upper(&s0, &ensemble()).unwrap(), r.nominal) < 1e-10);
    }
}

#[test]
fn bounds_match_direct_optimization() {
    let opts = SolverOptions::default();
    for r in &REFERENCES {
        let problem = isotropic(r.variance, r.epsilon);
        let lower = solve_bound(Direction::Lower, &problem, &opts).unwrap();
        let upper = solve_bound(Direction::Upper, &problem, &opts).unwrap();
        assert!(rel(lower.bound_value, r.lower) < 1e-8, "p = {}: lower {}", r.p, lower.bound_value);
        assert!(rel(upper.bound_value, r.upper) < 1e-8, "p = {}: upper {}", r.p, upper.bound_value);
        for b in [&lower, &upper] {
            assert!(b.kl_residual <= 1e-10);
            assert!(b.fixed_point_residual <= 1e-11);
            let res = covariance_equation_residual(b.alpha, &b.sigma_x, problem.ensemble(), problem.reference())
                .unwrap();
            assert!(res < 1e-9, "covariance equation residual {res}");
        }
        assert!(lower.alpha < 0.0 && upper.alpha > 0.0);
    }
}

#[test]
fn cramer_rao_below_lower_bound_for_heavy_tails() {
    let r = &REFERENCES[0];
    let cr = cramer_rao_lower(Some(r.fisher), &ensemble()).unwrap();
    let lower = solve_bound(Direction::Lower, &isotropic(r.variance, r.epsilon), &SolverOptions::default())
        .unwrap();
    assert!(cr < lower.bound_value);
}
