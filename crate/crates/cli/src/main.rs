//! `cheb-fractal`: generate fractal Chebyshev schedules, run
//! optimizers on the bundled fixtures, verify the polynomial-norm
//! bounds, and reproduce the desk-scale experiments as CSV data.
//!
//! Exit codes: 0 success / all rows pass, 1 verification failure,
//! 2 usage error, 3 runtime or fixture error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cheb_fractal::experiments::{run_experiment, ExperimentConfig, ExperimentError};
use cheb_fractal::io::atomic_write;
use cheb_fractal::optimize::{run_gd, run_gd_extended, GdOptions, PrecisionMode};
use cheb_fractal::problems::{
    path_laplacian_instance, CombinationLock, LogCosh, NoiseModel, Objective, QuadraticProblem,
};
use cheb_fractal::schedule::{build_schedule, ScheduleError, ScheduleSpec, StepOrdering};
use cheb_fractal::DEFAULT_SEED;

mod parallel;
mod verify;

#[derive(Parser)]
#[command(name = "cheb-fractal", version, about, disable_help_subcommand = true)]
struct Cli {
    /// RNG seed for random orderings, fixtures and noise
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (run, verify) or directory (experiment)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Trajectory arithmetic precision
    #[arg(long, global = true, value_enum, default_value_t = PrecisionArg::F64)]
    precision: PrecisionArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PrecisionArg {
    F64,
    Extended,
}

impl From<PrecisionArg> for PrecisionMode {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::F64 => PrecisionMode::F64,
            PrecisionArg::Extended => PrecisionMode::Extended,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OrderArg {
    Fractal,
    ReverseFractal,
    Increasing,
    Decreasing,
    Random,
}

#[derive(Args)]
struct ScheduleArgs {
    /// Lower spectral estimate m
    #[arg(long, default_value_t = 0.1)]
    m: f64,
    /// Upper spectral estimate M
    #[arg(long = "M", default_value_t = 1.0)]
    big_m: f64,
    /// Horizon T (power of 2 for fractal orderings)
    #[arg(long = "T", default_value_t = 8)]
    t_horizon: usize,
    /// Step ordering
    #[arg(long = "order", value_enum, default_value_t = OrderArg::Fractal)]
    order: OrderArg,
}

impl ScheduleArgs {
    fn build(&self, seed: u64) -> Result<ScheduleSpec, ScheduleError> {
        let ordering = match self.order {
            OrderArg::Fractal => StepOrdering::Fractal,
            OrderArg::ReverseFractal => StepOrdering::ReverseFractal,
            OrderArg::Increasing => StepOrdering::Increasing,
            OrderArg::Decreasing => StepOrdering::Decreasing,
            OrderArg::Random => StepOrdering::Random { seed },
        };
        build_schedule(self.m, self.big_m, self.t_horizon, ordering)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print a schedule as JSON on stdout
    Gen {
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Run an optimizer on a fixture and write the trajectory CSV
    Run {
        /// logcosh | path-laplacian | lock | a quadratic JSON file path
        #[arg(long)]
        fixture: String,
        #[command(flatten)]
        schedule: ScheduleArgs,
        /// Initial iterate: scalar, or comma-separated vector, or
        /// "zeros" for the fixture-sized origin
        #[arg(long, default_value = "zeros")]
        x1: String,
        /// none | gaussian | adversarial | gradient
        #[arg(long, default_value = "none")]
        noise: String,
        /// sigma (gaussian) or epsilon (adversarial/gradient)
        #[arg(long, default_value_t = 0.0)]
        noise_param: f64,
        /// Path-Laplacian dimension
        #[arg(long, default_value_t = 100)]
        d: usize,
        /// Path-Laplacian diagonal shift
        #[arg(long, default_value_t = 0.1)]
        shift: f64,
        /// Lock passcode (comma separated) for the lock fixture
        #[arg(long, default_value = "0.5,1.2,0.8")]
        eta_star: String,
        /// Lock tolerance delta
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
    /// Run a verification sweep; exit 0 iff every row passes
    Verify {
        /// prefix_suffix | infix | series | tree_exchange |
        /// factorization | reciprocal_sum | stats | spiky
        #[arg(long)]
        check: String,
        #[command(flatten)]
        schedule: ScheduleArgs,
    },
    /// Run a named experiment into an output directory
    Experiment {
        /// perm_stability | logcosh | lock | spiky | partial_accel |
        /// cg_schedule
        #[arg(long)]
        name: String,
        /// Read the 0.0005 noise parameter as a standard deviation
        /// instead of a variance
        #[arg(long, default_value_t = false)]
        noise_param_is_stddev: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    match &cli.command {
        Command::Gen { schedule } => cmd_gen(schedule, seed),
        Command::Run {
            fixture,
            schedule,
            x1,
            noise,
            noise_param,
            d,
            shift,
            eta_star,
            delta,
        } => cmd_run(
            fixture,
            schedule,
            x1,
            noise,
            *noise_param,
            *d,
            *shift,
            eta_star,
            *delta,
            seed,
            cli.precision.into(),
            &cli.out,
        ),
        Command::Verify { check, schedule } => verify::cmd_verify(check, schedule, &cli.out),
        Command::Experiment {
            name,
            noise_param_is_stddev,
        } => cmd_experiment(
            name,
            seed,
            cli.precision.into(),
            !noise_param_is_stddev,
            &cli.out,
        ),
    }
}

fn cmd_gen(args: &ScheduleArgs, seed: u64) -> ExitCode {
    match args.build(seed) {
        Ok(spec) => {
            println!("{}", spec.to_json());
            ExitCode::from(0)
        }
        Err(ScheduleError::UnsupportedHorizon(t)) => {
            eprintln!("error: T must be a power of 2 (got {t})");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn parse_x1(text: &str, dim: usize) -> Result<Vec<f64>, String> {
    if text == "zeros" {
        return Ok(vec![0.0; dim]);
    }
    let vals: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|e| format!("cannot parse --x1: {e}"))?;
    if vals.len() == 1 && dim > 1 {
        return Ok(vec![vals[0]; dim]);
    }
    if vals.len() != dim {
        return Err(format!(
            "--x1 has {} entries, fixture has dimension {dim}",
            vals.len()
        ));
    }
    Ok(vals)
}

fn parse_noise(kind: &str, param: f64, seed: u64) -> Result<NoiseModel, String> {
    match kind {
        "none" => Ok(NoiseModel::None),
        "gaussian" => Ok(NoiseModel::IidGaussian { sigma: param, seed }),
        "adversarial" => Ok(NoiseModel::BoundedAdversarial {
            epsilon: param,
            seed,
        }),
        "gradient" => Ok(NoiseModel::GradientNoise {
            epsilon: param,
            seed,
        }),
        other => Err(format!("unknown noise kind '{other}'")),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    fixture: &str,
    schedule: &ScheduleArgs,
    x1_text: &str,
    noise_kind: &str,
    noise_param: f64,
    d: usize,
    shift: f64,
    eta_star: &str,
    delta: f64,
    seed: u64,
    precision: PrecisionMode,
    out: &Option<PathBuf>,
) -> ExitCode {
    let sched = match schedule.build(seed) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    enum Fixture {
        Quad(QuadraticProblem),
        LogCosh(LogCosh),
        Lock(CombinationLock),
    }
    let fixture_obj = match fixture {
        "logcosh" => Fixture::LogCosh(LogCosh),
        "path-laplacian" => match path_laplacian_instance(d, shift, true, seed) {
            Ok(p) => Fixture::Quad(p),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(3);
            }
        },
        "lock" => {
            let steps: Result<Vec<f64>, _> = eta_star
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect();
            match steps
                .map_err(|e| format!("{e}"))
                .and_then(|s| CombinationLock::new(s, delta).map_err(|e| format!("{e}")))
            {
                Ok(l) => Fixture::Lock(l),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(3);
                }
            }
        }
        path => match std::fs::read_to_string(path)
            .map_err(|e| format!("{e}"))
            .and_then(|text| QuadraticProblem::from_json(&text).map_err(|e| format!("{e}")))
        {
            Ok(p) => Fixture::Quad(p),
            Err(e) => {
                eprintln!("error: cannot resolve fixture '{path}': {e}");
                return ExitCode::from(3);
            }
        },
    };
    let obj: &dyn Objective = match &fixture_obj {
        Fixture::Quad(p) => p,
        Fixture::LogCosh(l) => l,
        Fixture::Lock(l) => l,
    };
    let x1 = match parse_x1(x1_text, obj.dim()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let noise = match parse_noise(noise_kind, noise_param, seed) {
        Ok(n) => n,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let traj = match precision {
        PrecisionMode::Extended => match (&fixture_obj, &noise) {
            (Fixture::Quad(p), NoiseModel::None) => run_gd_extended(p, &sched, &x1),
            _ => {
                eprintln!("error: extended precision supports noiseless quadratic runs only");
                return ExitCode::from(2);
            }
        },
        PrecisionMode::F64 => run_gd(obj, &sched, &x1, &noise, GdOptions::default()),
    };
    let traj = match traj {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    let csv = traj.to_csv();
    match out {
        Some(path) => {
            if let Err(e) = atomic_write(path, &csv) {
                eprintln!("error: {e}");
                return ExitCode::from(3);
            }
        }
        None => print!("{csv}"),
    }
    ExitCode::from(0)
}

fn cmd_experiment(
    name: &str,
    seed: u64,
    precision: PrecisionMode,
    noise_param_is_variance: bool,
    out: &Option<PathBuf>,
) -> ExitCode {
    let mut cfg = ExperimentConfig::new(name);
    cfg.seed = seed;
    cfg.precision = precision;
    cfg.noise_param_is_variance = noise_param_is_variance;
    cfg.out_dir = Some(
        out.clone()
            .unwrap_or_else(|| PathBuf::from(format!("experiment_{name}"))),
    );
    match run_experiment(&cfg) {
        Ok(outcome) => {
            println!("{}", outcome.summary_json);
            if outcome.pass {
                ExitCode::from(0)
            } else {
                ExitCode::from(1)
            }
        }
        Err(ExperimentError::UnknownName(n)) => {
            eprintln!(
                "error: unknown experiment '{n}' (expected one of {})",
                cheb_fractal::experiments::EXPERIMENT_NAMES.join(", ")
            );
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
