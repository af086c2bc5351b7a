//! `wmmse`: bounds on the weighted MMSE sum from the command line.
//!
//! Exit codes: 0 success, 1 bad input or config, 2 solver failure,
//! 3 Monte Carlo verification failed.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use wmmse_core::config::ProblemConfig;
use wmmse_core::mc::{mc_weighted_sum, DEFAULT_N_INNER, DEFAULT_N_OUTER};
use wmmse_core::prior::PriorSpec;
use wmmse_core::scenario::{noise_from_distances, SensorField};
use wmmse_core::sweep::{parse_grid, sweep_ball, sweep_p, write_csv, BallCovariance, CsvLayout, SweepRow};
use wmmse_core::{
    solve_bound, weighted_mmse_sum, BoundResult, Direction, DivergenceBall, Error, Matrix, Problem, SolverOptions,
};

#[derive(Parser)]
#[command(name = "wmmse", version, about = "Bounds on the weighted sum of MMSEs under a KL prior ball")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Upper and lower bound for the problem in a config file.
    Bound {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the radius in the config.
        #[arg(long, allow_negative_numbers = true)]
        epsilon: Option<f64>,
    },
    /// Sweep over generalized Gaussian priors; writes CSV.
    SweepP {
        #[arg(long)]
        config: PathBuf,
        /// `start:stop:count` or a comma separated list.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep over uniform priors on a ball of radius R; writes CSV.
    SweepBall {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Covariance assigned to the ball prior.
        #[arg(long, value_enum, default_value_t = Convention::PerCoordinate)]
        convention: Convention,
    },
    /// Checks the bounds against a Monte Carlo estimate of the true MMSEs.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// `gen-gauss:<p>`, `uniform-ball:<R>` or `gaussian`.
        #[arg(long)]
        prior: String,
        #[arg(long, default_value_t = DEFAULT_N_OUTER)]
        n_outer: usize,
        #[arg(long, default_value_t = DEFAULT_N_INNER)]
        n_inner: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Writes a config for sensors at the given distances from the source.
    Scenario {
        /// Comma separated distances in meters.
        #[arg(long, value_delimiter = ',', required = true)]
        distances: Vec<f64>,
        /// Source power.
        #[arg(long)]
        rho0: f64,
        #[arg(long)]
        gamma: f64,
        /// Path-loss exponent in [2, 3].
        #[arg(long)]
        m: f64,
        /// Base noise variance.
        #[arg(long)]
        sigma0: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        dimension: usize,
        /// Variance of the isotropic reference prior.
        #[arg(long, default_value_t = 1.0)]
        prior_variance: f64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Comma separated channel weights (default all 1).
        #[arg(long, value_delimiter = ',')]
        lambda: Option<Vec<f64>>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    /// R²/(K+2) on each coordinate.
    PerCoordinate,
    /// K R²/(K+2) on each coordinate.
    TotalSecondMoment,
}

enum Failure {
    Input(Error),
    Solver(Error),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let solver = e.is_solver_failure()
            || matches!(e, Error::OrderingViolation(_) | Error::DegenerateWeights { .. });
        if solver {
            Failure::Solver(e)
        } else {
            Failure::Input(e)
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(Error::Io(e))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap would exit with 2, which is reserved for solver failures
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Verification) => ExitCode::from(3),
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Bound { config, epsilon } => cmd_bound(&config, epsilon),
        Command::SweepP { config, grid, out } => {
            let problem = load(&config)?;
            let grid = parse_grid(&grid)?;
            let rows = sweep_p(problem.ensemble(), &grid, &SolverOptions::default())?;
            emit(&rows, CsvLayout::Exponent, out.as_deref())
        }
        Command::SweepBall {
            config,
            grid,
            out,
            convention,
        } => {
            let problem = load(&config)?;
            let grid = parse_grid(&grid)?;
            let convention = match convention {
                Convention::PerCoordinate => BallCovariance::PerCoordinate,
                Convention::TotalSecondMoment => BallCovariance::TotalSecondMoment,
            };
            let rows = sweep_ball(problem.ensemble(), &grid, convention, &SolverOptions::default())?;
            emit(&rows, CsvLayout::Radius, out.as_deref())
        }
        Command::Verify {
            config,
            prior,
            n_outer,
            n_inner,
            seed,
        } => cmd_verify(&config, &prior, n_outer, n_inner, seed),
        Command::Scenario {
            distances,
            rho0,
            gamma,
            m,
            sigma0,
            out,
            dimension,
            prior_variance,
            epsilon,
            lambda,
        } => {
            let field = SensorField {
                distances,
                source_power: rho0,
                decay: gamma,
                exponent: m,
                base_noise: sigma0,
            };
            let ensemble = noise_from_distances(&field, dimension, lambda.as_deref())?;
            let reference = wmmse_core::GaussianReference::new(
                vec![0.0; dimension],
                Matrix::scaled_identity(dimension, prior_variance),
            )?;
            let problem = Problem::new(ensemble, DivergenceBall::new(reference, epsilon)?)?;
            ProblemConfig::from_problem(&problem).save(&out)?;
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<Problem, Failure> {
    Ok(ProblemConfig::load(path)?.to_problem()?)
}

fn print_bound(out: &mut impl Write, name: &str, b: &BoundResult) -> io::Result<()> {
    writeln!(
        out,
        "{name:<8} {:.10}  alpha={:.6e}  kl={:.12}  kl_residual={:.2e}  fixed_point_residual={:.2e}  inner_iterations={}  outer_iterations={}  method={:?}",
        b.bound_value,
        b.alpha,
        b.kl_at_solution,
        b.kl_residual,
        b.fixed_point_residual,
        b.inner_iterations,
        b.outer_iterations,
        b.method
    )
}

fn cmd_bound(config: &Path, epsilon: Option<f64>) -> Result<(), Failure> {
    let mut problem = load(config)?;
    if let Some(eps) = epsilon {
        problem = problem.with_epsilon(eps)?;
    }
    let opts = SolverOptions::default();
    let nominal = weighted_mmse_sum(problem.reference().covariance(), problem.ensemble(), None)?;
    let upper = solve_bound(Direction::Upper, &problem, &opts)?;
    let lower = solve_bound(Direction::Lower, &problem, &opts)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "epsilon  {}", problem.epsilon())?;
    writeln!(out, "nominal  {:.10}", nominal.weighted_sum)?;
    print_bound(&mut out, "upper", &upper)?;
    print_bound(&mut out, "lower", &lower)?;
    Ok(())
}

fn emit(rows: &[SweepRow], layout: CsvLayout, out: Option<&Path>) -> Result<(), Failure> {
    for row in rows {
        for d in &row.diagnostics {
            log::warn!("{d}");
        }
    }
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_csv(&mut w, rows, layout)?;
            w.flush()?;
        }
        None => write_csv(&mut io::stdout().lock(), rows, layout)?,
    }
    Ok(())
}

fn parse_prior(text: &str, config: &Problem) -> Result<(PriorSpec, Problem), Error> {
    let k = config.dimension();
    let value = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::InvalidArgument(format!("prior '{text}': {e}")))
    };
    let spec = match text.split_once(':') {
        None if text == "gaussian" => {
            // the config's own reference and radius
            return Ok((PriorSpec::gaussian(config.reference().clone()), config.clone()));
        }
        Some(("gen-gauss", p)) => PriorSpec::generalized_gaussian(value(p)?, k)?,
        Some(("uniform-ball", r)) => PriorSpec::uniform_ball(value(r)?, k)?,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "prior '{text}': expected gen-gauss:<p>, uniform-ball:<R> or gaussian"
            )))
        }
    };
    let moments = spec.moments()?;
    let epsilon = moments.epsilon_to_best_gaussian.unwrap_or(0.0);
    let reference = spec.matched_gaussian()?;
    let problem = Problem::new(config.ensemble().clone(), DivergenceBall::new(reference, epsilon)?)?;
    Ok((spec, problem))
}

fn cmd_verify(config: &Path, prior: &str, n_outer: usize, n_inner: usize, seed: u64) -> Result<(), Failure> {
    let config = load(config)?;
    let (spec, problem) = parse_prior(prior, &config)?;
    let opts = SolverOptions::default();
    let lower = solve_bound(Direction::Lower, &problem, &opts)?;
    let upper = solve_bound(Direction::Upper, &problem, &opts)?;
    let mc = mc_weighted_sum(&spec, problem.ensemble(), n_outer, n_inner, seed)?;
    let pass = lower.bound_value - 3.0 * mc.std_error <= mc.value && mc.value <= upper.bound_value + 3.0 * mc.std_error;
    println!("prior    {prior}");
    println!("epsilon  {}", problem.epsilon());
    println!("lower    {:.10}", lower.bound_value);
    println!("mc       {:.10} +- {:.3e}  (n_outer={}, n_inner={}, seed={})", mc.value, mc.std_error, mc.n_outer, mc.n_inner, mc.seed);
    println!("upper    {:.10}", upper.bound_value);
    println!("{}", if pass { "PASS" } else { "FAIL" });
    if pass {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}
