//! Objectives and gradient oracles: quadratic fixtures, the
//! one-dimensional `log cosh` objective, the non-convex combination
//! lock, and the additive noise models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, SymMatrix};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// A differentiable objective with a first-order oracle. Minimizer and
/// minimum value are exposed when known so trajectories can log
/// residuals and optimality gaps.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn minimizer(&self) -> Option<&[f64]> {
        None
    }
    fn min_value(&self) -> Option<f64> {
        None
    }
}

/// Checked gradient evaluation.
pub fn gradient(problem: &dyn Objective, x: &[f64]) -> Result<Vec<f64>, ProblemError> {
    if x.len() != problem.dim() {
        return Err(ProblemError::DimensionMismatch {
            expected: problem.dim(),
            got: x.len(),
        });
    }
    Ok(problem.gradient(x))
}

/// Gradient plus the additive iterate perturbation `xi_t` the noise
/// model produces at step `t` (1-based); the pair is what the perturbed
/// update `x - eta * g + xi` consumes, with `xi` returned for logging.
pub fn perturbed_gradient(
    problem: &dyn Objective,
    x: &[f64],
    noise: &NoiseModel,
    t: usize,
    eta_t: f64,
) -> Result<(Vec<f64>, Vec<f64>), ProblemError> {
    let g = gradient(problem, x)?;
    let xi = noise.xi(t, x, problem.minimizer(), eta_t);
    Ok((g, xi))
}

// ---------------------------------------------------------------------
// Quadratic problems
// ---------------------------------------------------------------------

/// `f(x) = 1/2 x^T A x - b^T x` with A symmetric positive definite.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    a: SymMatrix,
    b: Vec<f64>,
    x_star: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    pub seed: Option<u64>,
}

impl QuadraticProblem {
    pub fn a(&self) -> &SymMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn x_star(&self) -> &[f64] {
        &self.x_star
    }

    /// `f(x*) = -1/2 b^T x*`.
    pub fn f_star(&self) -> f64 {
        -0.5 * linalg::dot(&self.b, &self.x_star)
    }

    /// Serializes to JSON: dense row-major A, b, spectrum metadata, and
    /// the generating seed for random instances.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Raw<'a> {
            d: usize,
            a_row_major: &'a [f64],
            b: &'a [f64],
            x_star: &'a [f64],
            lambda_min: f64,
            lambda_max: f64,
            kappa: f64,
            #[serde(skip_serializing_if = "Option::is_none")]
            seed: Option<u64>,
        }
        serde_json::to_string_pretty(&Raw {
            d: self.a.n(),
            a_row_major: self.a.row_major(),
            b: &self.b,
            x_star: &self.x_star,
            lambda_min: self.lambda_min,
            lambda_max: self.lambda_max,
            kappa: self.kappa,
            seed: self.seed,
        })
        .expect("quadratic serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, ProblemError> {
        #[derive(Deserialize)]
        struct Raw {
            d: usize,
            a_row_major: Vec<f64>,
            b: Vec<f64>,
            seed: Option<u64>,
        }
        let raw: Raw = serde_json::from_str(text)
            .map_err(|e| ProblemError::InvalidArgument(format!("problem json: {e}")))?;
        let a = SymMatrix::from_row_major(raw.d, raw.a_row_major)?;
        let mut p = make_quadratic(a, raw.b)?;
        p.seed = raw.seed;
        Ok(p)
    }
}

impl Objective for QuadraticProblem {
    fn dim(&self) -> usize {
        self.a.n()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let ax = self.a.matvec(x);
        0.5 * linalg::dot(x, &ax) - linalg::dot(&self.b, x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.a.matvec(x);
        for (gi, bi) in g.iter_mut().zip(&self.b) {
            *gi -= bi;
        }
        g
    }

    fn minimizer(&self) -> Option<&[f64]> {
        Some(&self.x_star)
    }

    fn min_value(&self) -> Option<f64> {
        Some(self.f_star())
    }
}

/// Builds a quadratic problem: minimizer via Cholesky, spectrum bounds
/// via the iterative symmetric eigensolver at residual tolerance 1e-10,
/// and the `A x* = b` residual re-checked to 1e-10 relative.
pub fn make_quadratic(a: SymMatrix, b: Vec<f64>) -> Result<QuadraticProblem, ProblemError> {
    if b.len() != a.n() {
        return Err(ProblemError::DimensionMismatch {
            expected: a.n(),
            got: b.len(),
        });
    }
    let l = linalg::cholesky(&a).map_err(|_| ProblemError::NotPositiveDefinite)?;
    let x_star = linalg::cholesky_solve(&l, &b);
    let ax = a.matvec(&x_star);
    let mut res = 0.0f64;
    for (axi, bi) in ax.iter().zip(&b) {
        res += (axi - bi) * (axi - bi);
    }
    let bnorm = linalg::norm2(&b).max(1e-300);
    if res.sqrt() > 1e-10 * bnorm {
        return Err(ProblemError::InvalidArgument(format!(
            "solve residual {:e} exceeds 1e-10 relative",
            res.sqrt() / bnorm
        )));
    }
    let (lambda_min, lambda_max) = linalg::extreme_eigenvalues(&a, 1e-10)?;
    if lambda_min <= 0.0 {
        return Err(ProblemError::NotPositiveDefinite);
    }
    Ok(QuadraticProblem {
        a,
        b,
        x_star,
        lambda_min,
        lambda_max,
        kappa: lambda_max / lambda_min,
        seed: None,
    })
}

/// The path-graph Laplacian fixture: `A = L / lambda_max(L) + shift * I`
/// (or `L + shift * I` when `scale_to_unit_lmax` is false), with
/// `b ~ N(0, I)` drawn from `seed`.
///
/// The Laplacian spectrum is the closed form
/// `lambda_k(L) = 2 - 2 cos(k pi / d)`, `k = 0..d-1`, so the spectrum
/// bounds of A are set analytically: `[shift, 1 + shift]` in the scaled
/// case.
pub fn path_laplacian_instance(
    d: usize,
    shift: f64,
    scale_to_unit_lmax: bool,
    seed: u64,
) -> Result<QuadraticProblem, ProblemError> {
    if d < 2 {
        return Err(ProblemError::InvalidArgument(format!(
            "path graph needs d >= 2, got {d}"
        )));
    }
    if !(shift > 0.0) {
        return Err(ProblemError::InvalidArgument(
            "shift must be positive for positive definiteness".into(),
        ));
    }
    let lmax_l = 2.0 - 2.0 * ((d as f64 - 1.0) * std::f64::consts::PI / d as f64).cos();
    let scale = if scale_to_unit_lmax {
        1.0 / lmax_l
    } else {
        1.0
    };
    let mut data = vec![0.0f64; d * d];
    for i in 0..d {
        let deg = if i == 0 || i == d - 1 { 1.0 } else { 2.0 };
        data[i * d + i] = scale * deg + shift;
        if i + 1 < d {
            data[i * d + i + 1] = -scale;
            data[(i + 1) * d + i] = -scale;
        }
    }
    let a = SymMatrix::from_row_major(d, data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let l = linalg::cholesky(&a).map_err(|_| ProblemError::NotPositiveDefinite)?;
    let x_star = linalg::cholesky_solve(&l, &b);
    let (lambda_min, lambda_max) = (shift, scale * lmax_l + shift);
    Ok(QuadraticProblem {
        a,
        b,
        x_star,
        lambda_min,
        lambda_max,
        kappa: lambda_max / lambda_min,
        seed: Some(seed),
    })
}

// ---------------------------------------------------------------------
// Scalar problems
// ---------------------------------------------------------------------

/// `f(x) = log cosh(x) + 0.01 x^2`: 1.02-smooth, 0.02-strongly convex,
/// minimized at 0. A one-dimensional ridge-logistic-style objective on
/// which the accelerated envelope fails.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogCosh;

const LOGCOSH_MIN: [f64; 1] = [0.0];

impl Objective for LogCosh {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        let z = x[0];
        // ln cosh(z) = |z| + ln1p(e^{-2|z|}) - ln 2, stable for large |z|
        let az = z.abs();
        az + (-2.0 * az).exp().ln_1p() - std::f64::consts::LN_2 + 0.01 * z * z
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0].tanh() + 0.02 * x[0]]
    }

    fn minimizer(&self) -> Option<&[f64]> {
        Some(&LOGCOSH_MIN)
    }

    fn min_value(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Value and (right-continuous) derivative information of the lock.
#[derive(Debug, Clone, PartialEq)]
pub struct LockEval {
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// The non-convex combination lock on `R^T`: gradient descent from the
/// origin reaches the global minimum `-1` only if every step size
/// matches the passcode to within `delta`. Implemented as the nested
/// piecewise construction (unsmoothed; the derivative at a breakpoint is
/// the right-hand one).
#[derive(Debug, Clone)]
pub struct CombinationLock {
    pub eta_star: Vec<f64>,
    pub delta: f64,
}

impl CombinationLock {
    pub fn new(eta_star: Vec<f64>, delta: f64) -> Result<Self, ProblemError> {
        if eta_star.is_empty() {
            return Err(ProblemError::InvalidArgument("empty passcode".into()));
        }
        let min_eta = eta_star.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min_eta > 0.0) {
            return Err(ProblemError::InvalidArgument(
                "passcode steps must be positive".into(),
            ));
        }
        if !(delta > 0.0) || delta > 0.5 * min_eta {
            return Err(ProblemError::InvalidArgument(format!(
                "delta must satisfy 0 < delta <= min(eta*)/2 = {}",
                0.5 * min_eta
            )));
        }
        Ok(Self { eta_star, delta })
    }

    /// Evaluates the nested piecewise function over the coordinates.
    /// Coordinate t sees, in order: the plateau 2 left of `-delta/2`,
    /// the descending ramp `1 - z`, the lock window
    /// `[eta*_t - delta/2, eta*_t + delta/2]` (which recurses into the
    /// next coordinate, or yields -1 at the last), and the plateau 0 to
    /// the right.
    pub fn eval(&self, x: &[f64]) -> Result<LockEval, ProblemError> {
        let t_len = self.eta_star.len();
        if x.len() != t_len {
            return Err(ProblemError::DimensionMismatch {
                expected: t_len,
                got: x.len(),
            });
        }
        let half = 0.5 * self.delta;
        let mut grad = vec![0.0; t_len];
        for (t, (&z, &eta)) in x.iter().zip(&self.eta_star).enumerate() {
            if z < -half {
                return Ok(LockEval {
                    value: 2.0,
                    gradient: grad,
                });
            }
            if z < eta - half {
                grad[t] = -1.0;
                return Ok(LockEval {
                    value: 1.0 - z,
                    gradient: grad,
                });
            }
            if z <= eta + half {
                continue; // inside the window: next coordinate decides
            }
            return Ok(LockEval {
                value: 0.0,
                gradient: grad,
            });
        }
        Ok(LockEval {
            value: -1.0,
            gradient: grad,
        })
    }
}

impl Objective for CombinationLock {
    fn dim(&self) -> usize {
        self.eta_star.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x).expect("dimension checked by caller").value
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.eval(x).expect("dimension checked by caller").gradient
    }

    fn min_value(&self) -> Option<f64> {
        Some(-1.0)
    }
}

/// Convenience wrapper matching the lock's operation surface.
pub fn combination_lock_eval(
    eta_star: &[f64],
    delta: f64,
    x: &[f64],
) -> Result<LockEval, ProblemError> {
    CombinationLock::new(eta_star.to_vec(), delta)?.eval(x)
}

// ---------------------------------------------------------------------
// Noise models
// ---------------------------------------------------------------------

/// Additive iterate perturbations `x_{t+1} = x_t - eta_t g_t + xi_t`.
///
/// * `IidGaussian`: `xi_t = sigma * N(0, I)`.
/// * `BoundedAdversarial`: deterministic `|xi_t| = epsilon`, directed
///   along `-(x_t - x*)`; only the bound `|xi_t| <= epsilon` matters for
///   the stability guarantees, and a deterministic choice keeps replays
///   bit-identical.
/// * `GradientNoise`: an epsilon-bounded gradient error, so
///   `xi_t = eta_t * (epsilon-bounded vector)`.
///
/// Every perturbation is a pure function of `(seed, t, x_t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    None,
    IidGaussian { sigma: f64, seed: u64 },
    BoundedAdversarial { epsilon: f64, seed: u64 },
    GradientNoise { epsilon: f64, seed: u64 },
}

impl NoiseModel {
    fn step_rng(seed: u64, t: usize) -> ChaCha8Rng {
        // splitmix64 over (seed, t) so each step gets its own stream
        let mut z = seed ^ (t as u64).wrapping_mul(0x9e3779b97f4a7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
    }

    /// The perturbation applied after update `t` (1-based).
    pub fn xi(&self, t: usize, x: &[f64], x_star: Option<&[f64]>, eta_t: f64) -> Vec<f64> {
        let d = x.len();
        match self {
            NoiseModel::None => vec![0.0; d],
            NoiseModel::IidGaussian { sigma, seed } => {
                let mut rng = Self::step_rng(*seed, t);
                (0..d)
                    .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            }
            NoiseModel::BoundedAdversarial { epsilon, seed: _ } => {
                let mut dir: Vec<f64> = match x_star {
                    Some(xs) => x.iter().zip(xs).map(|(a, b)| -(a - b)).collect(),
                    None => vec![0.0; d],
                };
                let n = linalg::norm2(&dir);
                if n == 0.0 {
                    return vec![0.0; d];
                }
                dir.iter_mut().for_each(|v| *v *= epsilon / n);
                dir
            }
            NoiseModel::GradientNoise { epsilon, seed } => {
                let mut rng = Self::step_rng(*seed, t);
                let mut dir: Vec<f64> = (0..d)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let n = linalg::norm2(&dir);
                if n == 0.0 {
                    return vec![0.0; d];
                }
                dir.iter_mut().for_each(|v| *v *= eta_t * epsilon / n);
                dir
            }
        }
    }
}
