//! Deterministic first-order optimizers and their trajectories.

use thiserror::Error;

use crate::dd::{self, Dd};
use crate::io::fmt_g17;
use crate::linalg::{self};
use crate::problems::{NoiseModel, Objective, ProblemError, QuadraticProblem};
use crate::schedule::{ScheduleSpec, StepOrdering};

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecisionMode {
    F64,
    /// Double-double trajectory arithmetic; quadratic noiseless runs only.
    Extended,
}

impl PrecisionMode {
    pub fn tag(&self) -> &'static str {
        match self {
            PrecisionMode::F64 => "f64",
            PrecisionMode::Extended => "extended",
        }
    }
}

/// One row per iterate: `t = 0` is the initial point, `t = k` the state
/// after k updates. Residual and gap are NaN when the problem does not
/// expose its minimizer; divergent runs saturate to +inf.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub t: usize,
    pub eta: f64,
    pub residual_norm: f64,
    pub obj_gap: f64,
    pub grad_norm: f64,
    pub xi_norm: f64,
    pub x: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub x_out: Vec<f64>,
    pub diverged: bool,
    pub converged_early: bool,
    pub optimizer: String,
    pub schedule_hash: u64,
    pub seed: Option<u64>,
    pub precision: PrecisionMode,
}

impl Trajectory {
    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.residual_norm)
    }

    pub fn peak_residual(&self) -> f64 {
        self.records
            .iter()
            .fold(0.0f64, |a, r| a.max(r.residual_norm))
    }

    /// CSV per the trajectory interface: mandatory header, one row per
    /// iterate, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,eta,residual_norm,obj_gap,grad_norm,xi_norm\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.t,
                fmt_g17(r.eta),
                fmt_g17(r.residual_norm),
                fmt_g17(r.obj_gap),
                fmt_g17(r.grad_norm),
                fmt_g17(r.xi_norm)
            ));
        }
        s
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GdOptions {
    pub record_iterates: bool,
    pub precision: PrecisionMode,
}

impl Default for GdOptions {
    fn default() -> Self {
        Self {
            record_iterates: false,
            precision: PrecisionMode::F64,
        }
    }
}

fn residual_norm(x: &[f64], x_star: Option<&[f64]>) -> f64 {
    match x_star {
        Some(xs) => {
            let mut s = 0.0;
            for (a, b) in x.iter().zip(xs) {
                s += (a - b) * (a - b);
            }
            let n = s.sqrt();
            if n.is_nan() && x.iter().any(|v| !v.is_finite()) {
                f64::INFINITY
            } else {
                n
            }
        }
        None => f64::NAN,
    }
}

fn record(
    obj: &dyn Objective,
    t: usize,
    eta: f64,
    x: &[f64],
    xi_norm: f64,
    keep_x: bool,
) -> TrajectoryRecord {
    let finite = x.iter().all(|v| v.is_finite());
    let grad_norm = if finite {
        linalg::norm2(&obj.gradient(x))
    } else {
        f64::INFINITY
    };
    let obj_gap = match (obj.min_value(), finite) {
        (Some(fs), true) => obj.value(x) - fs,
        (Some(_), false) => f64::INFINITY,
        (None, _) => f64::NAN,
    };
    TrajectoryRecord {
        t,
        eta,
        residual_norm: residual_norm(x, obj.minimizer()),
        obj_gap,
        grad_norm,
        xi_norm,
        x: keep_x.then(|| x.to_vec()),
    }
}

/// Gradient descent `x <- x - eta_t grad f(x) + xi_t` under the given
/// schedule. A non-finite iterate truncates the run with the divergence
/// flag set (a divergent run is data, not an error).
pub fn run_gd(
    obj: &dyn Objective,
    schedule: &ScheduleSpec,
    x1: &[f64],
    noise: &NoiseModel,
    opts: GdOptions,
) -> Result<Trajectory, OptimizeError> {
    if x1.len() != obj.dim() {
        return Err(OptimizeError::InvalidArgument(format!(
            "x1 has dimension {}, problem expects {}",
            x1.len(),
            obj.dim()
        )));
    }
    if opts.precision == PrecisionMode::Extended {
        return Err(OptimizeError::InvalidArgument(
            "extended precision is only available through run_gd_extended on quadratics".into(),
        ));
    }
    let seed = match noise {
        NoiseModel::None => None,
        NoiseModel::IidGaussian { seed, .. }
        | NoiseModel::BoundedAdversarial { seed, .. }
        | NoiseModel::GradientNoise { seed, .. } => Some(*seed),
    };
    let mut x = x1.to_vec();
    let mut records = Vec::with_capacity(schedule.len() + 1);
    records.push(record(obj, 0, 0.0, &x, 0.0, opts.record_iterates));
    let mut diverged = false;
    for (k, &eta) in schedule.steps.iter().enumerate() {
        let t = k + 1;
        let g = obj.gradient(&x);
        if g.iter().any(|v| !v.is_finite()) {
            diverged = true;
            break;
        }
        let xi = noise.xi(t, &x, obj.minimizer(), eta);
        for i in 0..x.len() {
            x[i] = x[i] - eta * g[i] + xi[i];
        }
        records.push(record(
            obj,
            t,
            eta,
            &x,
            linalg::norm2(&xi),
            opts.record_iterates,
        ));
        if x.iter().any(|v| !v.is_finite()) {
            diverged = true;
            break;
        }
    }
    Ok(Trajectory {
        records,
        x_out: x,
        diverged,
        converged_early: false,
        optimizer: "gd".into(),
        schedule_hash: schedule.hash(),
        seed,
        precision: PrecisionMode::F64,
    })
}

/// Noiseless gradient descent on a quadratic in double-double
/// arithmetic. Records are reported in f64.
pub fn run_gd_extended(
    problem: &QuadraticProblem,
    schedule: &ScheduleSpec,
    x1: &[f64],
) -> Result<Trajectory, OptimizeError> {
    if x1.len() != problem.dim() {
        return Err(OptimizeError::InvalidArgument(format!(
            "x1 has dimension {}, problem expects {}",
            x1.len(),
            problem.dim()
        )));
    }
    let d = problem.dim();
    let a = problem.a();
    let b: Vec<Dd> = problem.b().iter().map(|&v| Dd::from_f64(v)).collect();
    let xs: Vec<Dd> = problem.x_star().iter().map(|&v| Dd::from_f64(v)).collect();
    let mut x: Vec<Dd> = x1.iter().map(|&v| Dd::from_f64(v)).collect();
    let mut records = Vec::with_capacity(schedule.len() + 1);
    let res = |x: &[Dd]| -> f64 {
        let diff: Vec<Dd> = x.iter().zip(&xs).map(|(&a, &b)| a - b).collect();
        dd::dd_norm2(&diff)
    };
    let to_f64 = |x: &[Dd]| -> Vec<f64> { x.iter().map(|v| v.to_f64()).collect() };
    let push = |records: &mut Vec<TrajectoryRecord>, t: usize, eta: f64, x: &[Dd]| {
        let xf = to_f64(x);
        let mut rec = record(problem, t, eta, &xf, 0.0, false);
        rec.residual_norm = res(x);
        records.push(rec);
    };
    push(&mut records, 0, 0.0, &x);
    for (k, &eta) in schedule.steps.iter().enumerate() {
        // g = A x - b, in dd
        let mut g: Vec<Dd> = Vec::with_capacity(d);
        for i in 0..d {
            let mut acc = -b[i];
            for j in 0..d {
                acc = acc + x[j].mul_f64(a.get(i, j));
            }
            g.push(acc);
        }
        for i in 0..d {
            x[i] = x[i] - g[i].mul_f64(eta);
        }
        push(&mut records, k + 1, eta, &x);
    }
    Ok(Trajectory {
        x_out: to_f64(&x),
        records,
        diverged: false,
        converged_early: false,
        optimizer: "gd".into(),
        schedule_hash: schedule.hash(),
        seed: None,
        precision: PrecisionMode::Extended,
    })
}

/// Exact line search on a quadratic: `eta_t = g^T g / g^T A g`. Stops
/// early (converged flag) on a zero gradient. The objective is
/// non-increasing by construction.
pub fn run_line_search_gd(
    problem: &QuadraticProblem,
    x1: &[f64],
    t_steps: usize,
) -> Result<Trajectory, OptimizeError> {
    if x1.len() != problem.dim() {
        return Err(OptimizeError::InvalidArgument(
            "x1 dimension mismatch".into(),
        ));
    }
    let mut x = x1.to_vec();
    let mut records = Vec::with_capacity(t_steps + 1);
    records.push(record(problem, 0, 0.0, &x, 0.0, false));
    let mut converged_early = false;
    for t in 1..=t_steps {
        let g = problem.gradient(&x);
        let gg = linalg::dot(&g, &g);
        if gg == 0.0 {
            converged_early = true;
            break;
        }
        let ag = problem.a().matvec(&g);
        let eta = gg / linalg::dot(&g, &ag);
        for i in 0..x.len() {
            x[i] -= eta * g[i];
        }
        records.push(record(problem, t, eta, &x, 0.0, false));
    }
    Ok(Trajectory {
        x_out: x,
        records,
        diverged: false,
        converged_early,
        optimizer: "line_search_gd".into(),
        schedule_hash: 0,
        seed: None,
        precision: PrecisionMode::F64,
    })
}

/// Heavy-ball: `x_{t+1} = x_t - eta grad f(x_t) + beta (x_t - x_{t-1})`.
pub fn run_heavy_ball(
    obj: &dyn Objective,
    x1: &[f64],
    t_steps: usize,
    eta: f64,
    beta: f64,
) -> Result<Trajectory, OptimizeError> {
    momentum_run(obj, x1, t_steps, eta, beta, false)
}

/// Nesterov: `y_t = x_t + beta (x_t - x_{t-1})`,
/// `x_{t+1} = y_t - eta grad f(y_t)`.
pub fn run_nesterov(
    obj: &dyn Objective,
    x1: &[f64],
    t_steps: usize,
    eta: f64,
    beta: f64,
) -> Result<Trajectory, OptimizeError> {
    momentum_run(obj, x1, t_steps, eta, beta, true)
}

fn momentum_run(
    obj: &dyn Objective,
    x1: &[f64],
    t_steps: usize,
    eta: f64,
    beta: f64,
    nesterov: bool,
) -> Result<Trajectory, OptimizeError> {
    if x1.len() != obj.dim() {
        return Err(OptimizeError::InvalidArgument(
            "x1 dimension mismatch".into(),
        ));
    }
    if eta < 0.0 || beta < 0.0 {
        return Err(OptimizeError::InvalidArgument(
            "eta and beta must be nonnegative".into(),
        ));
    }
    let d = x1.len();
    let mut x = x1.to_vec();
    let mut x_prev = x1.to_vec();
    let mut records = Vec::with_capacity(t_steps + 1);
    records.push(record(obj, 0, 0.0, &x, 0.0, false));
    let mut diverged = false;
    for t in 1..=t_steps {
        let mut y = vec![0.0; d];
        for i in 0..d {
            y[i] = x[i] + beta * (x[i] - x_prev[i]);
        }
        let g = if nesterov {
            obj.gradient(&y)
        } else {
            obj.gradient(&x)
        };
        if g.iter().any(|v| !v.is_finite()) {
            diverged = true;
            break;
        }
        let mut x_next = vec![0.0; d];
        for i in 0..d {
            x_next[i] = if nesterov {
                y[i] - eta * g[i]
            } else {
                x[i] - eta * g[i] + beta * (x[i] - x_prev[i])
            };
        }
        x_prev = std::mem::replace(&mut x, x_next);
        records.push(record(obj, t, eta, &x, 0.0, false));
        if x.iter().any(|v| !v.is_finite()) {
            diverged = true;
            break;
        }
    }
    Ok(Trajectory {
        x_out: x,
        records,
        diverged,
        converged_early: false,
        optimizer: if nesterov { "nesterov" } else { "heavy_ball" }.into(),
        schedule_hash: 0,
        seed: None,
        precision: PrecisionMode::F64,
    })
}

/// Conjugate gradient output: the trajectory plus the Ritz values of
/// the accumulated Lanczos tridiagonal matrix, which are the roots of
/// the realized residual polynomial.
#[derive(Debug, Clone)]
pub struct CgResult {
    pub trajectory: Trajectory,
    pub ritz_values: Vec<f64>,
}

/// Standard CG on `A x = b` from `x1`, at most `t_steps <= d` steps.
/// Breakdown (zero residual) terminates early with the Ritz values of
/// the realized degree.
pub fn run_cg(
    problem: &QuadraticProblem,
    x1: &[f64],
    t_steps: usize,
) -> Result<CgResult, OptimizeError> {
    let d = problem.dim();
    if x1.len() != d {
        return Err(OptimizeError::InvalidArgument(
            "x1 dimension mismatch".into(),
        ));
    }
    if t_steps > d {
        return Err(OptimizeError::InvalidArgument(format!(
            "CG supports at most d = {d} steps, requested {t_steps}"
        )));
    }
    let a = problem.a();
    let mut x = x1.to_vec();
    let mut r: Vec<f64> = problem
        .b()
        .iter()
        .zip(a.matvec(&x))
        .map(|(bi, axi)| bi - axi)
        .collect();
    let mut p = r.clone();
    let mut rs = linalg::dot(&r, &r);
    let r0 = linalg::norm2(&problem.b()).max(1.0);
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut records = Vec::with_capacity(t_steps + 1);
    records.push(record(problem, 0, 0.0, &x, 0.0, false));
    let mut converged_early = false;
    for t in 1..=t_steps {
        if rs.sqrt() <= 1e-14 * r0 {
            converged_early = true;
            break;
        }
        let ap = a.matvec(&p);
        let alpha = rs / linalg::dot(&p, &ap);
        for i in 0..d {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = linalg::dot(&r, &r);
        let beta = rs_new / rs;
        alphas.push(alpha);
        betas.push(beta);
        for i in 0..d {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_new;
        records.push(record(problem, t, alpha, &x, 0.0, false));
    }
    // Lanczos tridiagonal from the CG coefficients:
    //   diag_j  = 1/alpha_j + beta_{j-1}/alpha_{j-1}
    //   off_j   = sqrt(beta_j)/alpha_j
    let k = alphas.len();
    let mut diag = vec![0.0; k];
    let mut off = vec![0.0; k.saturating_sub(1)];
    for j in 0..k {
        diag[j] = 1.0 / alphas[j]
            + if j > 0 {
                betas[j - 1] / alphas[j - 1]
            } else {
                0.0
            };
        if j + 1 < k {
            off[j] = betas[j].sqrt() / alphas[j];
        }
    }
    let ritz_values = linalg::tridiag_eigenvalues(&diag, &off);
    Ok(CgResult {
        trajectory: Trajectory {
            x_out: x,
            records,
            diverged: false,
            converged_early,
            optimizer: "cg".into(),
            schedule_hash: 0,
            seed: None,
            precision: PrecisionMode::F64,
        },
        ritz_values,
    })
}

/// The instance-dependent schedule whose plain-GD output matches CG:
/// `eta_t = 1/ritz_t` for the realized Ritz values (which lie in
/// `[lambda_min, lambda_max]`), padded with zero steps up to `t_steps`.
/// Zero steps are executed literally (the iterate is unchanged).
pub fn extract_cg_schedule(
    problem: &QuadraticProblem,
    x1: &[f64],
    t_steps: usize,
) -> Result<ScheduleSpec, OptimizeError> {
    let cg = run_cg(problem, x1, t_steps)?;
    let mut steps: Vec<f64> = cg.ritz_values.iter().map(|&r| 1.0 / r).collect();
    steps.resize(t_steps, 0.0);
    let len = steps.len();
    Ok(ScheduleSpec {
        m: problem.lambda_min,
        big_m: problem.lambda_max,
        horizon: len,
        ordering: StepOrdering::Explicit {
            permutation: (1..=len).collect(),
        },
        steps,
        certified: false,
        transforms: vec!["cg_extracted".into()],
    })
}
