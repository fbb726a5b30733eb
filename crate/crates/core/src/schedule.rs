//! Chebyshev step-size schedules and the fractal ordering.
//!
//! The nodes on `[m, M]` are
//! `gamma_t = (M+m)/2 - (M-m)/2 * cos((t - 1/2) pi / T)`, `t = 1..T`,
//! and a schedule is some ordering of the reciprocals `1/gamma_t`. The
//! fractal ordering interlaces recursively so that large steps are
//! dispersed; see [`fractal_perm`].

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::io::fmt_g17;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported horizon: T = {0} is not a power of 2")]
    UnsupportedHorizon(usize),
    #[error("schedule json: {0}")]
    Json(String),
}

/// Step orderings. `Increasing`/`Decreasing` refer to the step sizes
/// themselves: `Increasing` starts with the smallest step, `Decreasing`
/// with the largest.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOrdering {
    Fractal,
    ReverseFractal,
    Increasing,
    Decreasing,
    Random {
        seed: u64,
    },
    /// 1-based node permutation: step at position t is `1/gamma_perm[t]`.
    Explicit {
        permutation: Vec<usize>,
    },
}

impl StepOrdering {
    pub fn tag(&self) -> &'static str {
        match self {
            StepOrdering::Fractal => "fractal",
            StepOrdering::ReverseFractal => "reverse_fractal",
            StepOrdering::Increasing => "increasing",
            StepOrdering::Decreasing => "decreasing",
            StepOrdering::Random { .. } => "random",
            StepOrdering::Explicit { .. } => "explicit",
        }
    }
}

/// An ordered learning-rate schedule with its construction parameters.
///
/// `certified` records whether the fractal-schedule norm bounds apply as
/// built; transforms that leave the guarantee regime (slow steps above
/// `2/M`, concatenation across mismatched `(m, M)`, spiky patterns)
/// clear it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSpec {
    pub m: f64,
    pub big_m: f64,
    /// Chebyshev horizon the nodes were built with. Transforms can make
    /// `steps.len()` differ from this.
    pub horizon: usize,
    pub ordering: StepOrdering,
    pub steps: Vec<f64>,
    pub certified: bool,
    /// Applied transform tags, in order, e.g. `["reverse", "repeat(3)"]`.
    pub transforms: Vec<String>,
}

/// Chebyshev nodes `gamma_1 < ... < gamma_T` on `[m, M]` (all equal to m
/// when m = M).
pub fn cheb_nodes(m: f64, big_m: f64, t_horizon: usize) -> Result<Vec<f64>, ScheduleError> {
    if !(m > 0.0) || !m.is_finite() || !big_m.is_finite() {
        return Err(ScheduleError::InvalidArgument(format!(
            "m must be positive and finite, got {m}"
        )));
    }
    if big_m < m {
        return Err(ScheduleError::InvalidArgument(format!(
            "M must satisfy M >= m, got m={m}, M={big_m}"
        )));
    }
    if t_horizon < 1 {
        return Err(ScheduleError::InvalidArgument("T must be >= 1".into()));
    }
    let c = 0.5 * (big_m + m);
    let r = 0.5 * (big_m - m);
    Ok((1..=t_horizon)
        .map(|t| c - r * (((t as f64 - 0.5) * std::f64::consts::PI) / t_horizon as f64).cos())
        .collect())
}

/// The fractal permutation `sigma_T` (1-based), defined by
/// `sigma_1 = [1]`, `sigma_2T = interlace(sigma_T, 2T+1 - sigma_T)`.
///
/// `sigma_8 = [1, 8, 4, 5, 2, 7, 3, 6]`. Only powers of 2 are supported.
pub fn fractal_perm(t_horizon: usize) -> Result<Vec<usize>, ScheduleError> {
    if t_horizon == 0 || !t_horizon.is_power_of_two() {
        return Err(ScheduleError::UnsupportedHorizon(t_horizon));
    }
    let mut perm = vec![1usize];
    while perm.len() < t_horizon {
        let n = perm.len();
        let mut next = Vec::with_capacity(2 * n);
        for &a in &perm {
            next.push(a);
            next.push(2 * n + 1 - a);
        }
        perm = next;
    }
    Ok(perm)
}

/// Builds the ordered schedule `eta_t = 1/gamma_order(t)`.
pub fn build_schedule(
    m: f64,
    big_m: f64,
    t_horizon: usize,
    ordering: StepOrdering,
) -> Result<ScheduleSpec, ScheduleError> {
    let nodes = cheb_nodes(m, big_m, t_horizon)?;
    let order: Vec<usize> = match &ordering {
        StepOrdering::Fractal => fractal_perm(t_horizon)?,
        StepOrdering::ReverseFractal => {
            let mut p = fractal_perm(t_horizon)?;
            p.reverse();
            p
        }
        // nodes ascend, so reciprocals descend: node T first = smallest step
        StepOrdering::Increasing => (1..=t_horizon).rev().collect(),
        StepOrdering::Decreasing => (1..=t_horizon).collect(),
        StepOrdering::Random { seed } => {
            let mut p: Vec<usize> = (1..=t_horizon).collect();
            p.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            p
        }
        StepOrdering::Explicit { permutation } => {
            if permutation.len() != t_horizon {
                return Err(ScheduleError::InvalidArgument(format!(
                    "explicit permutation has length {}, expected {t_horizon}",
                    permutation.len()
                )));
            }
            let mut seen = vec![false; t_horizon + 1];
            for &i in permutation {
                if i < 1 || i > t_horizon || seen[i] {
                    return Err(ScheduleError::InvalidArgument(
                        "explicit permutation is not a bijection on 1..=T".into(),
                    ));
                }
                seen[i] = true;
            }
            permutation.clone()
        }
    };
    let steps = order.iter().map(|&i| 1.0 / nodes[i - 1]).collect();
    Ok(ScheduleSpec {
        m,
        big_m,
        horizon: t_horizon,
        ordering,
        steps,
        certified: true,
        transforms: vec![],
    })
}

/// Where `insert_slow` places the new steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InsertPosition {
    Front,
    Back,
    /// Insert before this 1-based position.
    At(usize),
}

/// Schedule transforms. All return a new spec; `certified` is cleared
/// when the transform leaves the regime the norm bounds cover.
#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    Reverse,
    Repeat {
        cycles: usize,
    },
    Concat {
        other: ScheduleSpec,
    },
    InsertSlow {
        count: usize,
        value: f64,
        position: InsertPosition,
    },
    /// After every step pair append a step `1/m_est`.
    Waltz {
        m_est: f64,
    },
}

impl ScheduleSpec {
    /// Wraps an explicit positive step list (passcodes, hand-built
    /// schedules). Marked uncertified: no node structure to certify.
    pub fn from_steps(steps: Vec<f64>) -> Result<Self, ScheduleError> {
        if steps.is_empty() || steps.iter().any(|&s| !(s > 0.0)) {
            return Err(ScheduleError::InvalidArgument(
                "explicit steps must be a nonempty positive list".into(),
            ));
        }
        let max = steps.iter().cloned().fold(f64::MIN, f64::max);
        let min = steps.iter().cloned().fold(f64::MAX, f64::min);
        let len = steps.len();
        Ok(ScheduleSpec {
            m: 1.0 / max,
            big_m: 1.0 / min,
            horizon: len,
            ordering: StepOrdering::Explicit {
                permutation: (1..=len).collect(),
            },
            steps,
            certified: false,
            transforms: vec!["explicit_steps".into()],
        })
    }

    /// Constant schedule `eta` of the given length (the m = M limit).
    pub fn constant(eta: f64, len: usize) -> Result<Self, ScheduleError> {
        if !(eta > 0.0) {
            return Err(ScheduleError::InvalidArgument(
                "constant step must be positive".into(),
            ));
        }
        build_schedule(1.0 / eta, 1.0 / eta, len, StepOrdering::Decreasing)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `theta = (M+m)/(M-m)`; infinite when m = M.
    pub fn theta(&self) -> f64 {
        if self.big_m == self.m {
            f64::INFINITY
        } else {
            (self.big_m + self.m) / (self.big_m - self.m)
        }
    }

    /// `rho = (sqrt(M)-sqrt(m))/(sqrt(M)+sqrt(m))`.
    pub fn rho(&self) -> f64 {
        (self.big_m.sqrt() - self.m.sqrt()) / (self.big_m.sqrt() + self.m.sqrt())
    }

    /// `kappa_hat = M/m`.
    pub fn kappa_hat(&self) -> f64 {
        self.big_m / self.m
    }

    /// FNV-1a over the step bit patterns; used to stamp trajectories.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for s in &self.steps {
            for b in s.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        h
    }

    pub fn transform(&self, op: Transform) -> Result<ScheduleSpec, ScheduleError> {
        let mut out = self.clone();
        match op {
            Transform::Reverse => {
                out.steps.reverse();
                out.transforms.push("reverse".into());
            }
            Transform::Repeat { cycles } => {
                if cycles < 1 {
                    return Err(ScheduleError::InvalidArgument("cycles must be >= 1".into()));
                }
                let one = out.steps.clone();
                for _ in 1..cycles {
                    out.steps.extend_from_slice(&one);
                }
                if cycles > 1 {
                    out.transforms.push(format!("repeat({cycles})"));
                }
            }
            Transform::Concat { other } => {
                if other.m != self.m || other.big_m != self.big_m {
                    // allowed, but the bounds no longer certify the result
                    out.certified = false;
                    out.m = self.m.min(other.m);
                    out.big_m = self.big_m.max(other.big_m);
                }
                out.certified = out.certified && other.certified;
                out.steps.extend_from_slice(&other.steps);
                out.transforms.push("concat".into());
            }
            Transform::InsertSlow {
                count,
                value,
                position,
            } => {
                if !(value >= 0.0) {
                    return Err(ScheduleError::InvalidArgument(
                        "inserted step must be >= 0".into(),
                    ));
                }
                // above 2/M the insertion guarantee lapses; allowed but uncertified
                if value > 2.0 / self.big_m {
                    out.certified = false;
                }
                let at = match position {
                    InsertPosition::Front => 0,
                    InsertPosition::Back => out.steps.len(),
                    InsertPosition::At(p) => {
                        if p < 1 || p > out.steps.len() + 1 {
                            return Err(ScheduleError::InvalidArgument(format!(
                                "insert position {p} out of range 1..={}",
                                out.steps.len() + 1
                            )));
                        }
                        p - 1
                    }
                };
                let tail: Vec<f64> = out.steps.split_off(at);
                out.steps.extend(std::iter::repeat(value).take(count));
                out.steps.extend(tail);
                out.transforms.push(format!("insert_slow({count})"));
            }
            Transform::Waltz { m_est } => {
                if out.steps.len() % 2 != 0 {
                    return Err(ScheduleError::InvalidArgument(
                        "waltz requires an even number of steps".into(),
                    ));
                }
                if !(m_est > 0.0) {
                    return Err(ScheduleError::InvalidArgument(
                        "waltz M estimate must be positive".into(),
                    ));
                }
                let mut steps = Vec::with_capacity(out.steps.len() * 3 / 2);
                for pair in out.steps.chunks(2) {
                    steps.push(pair[0]);
                    steps.push(pair[1]);
                    steps.push(1.0 / m_est);
                }
                out.steps = steps;
                out.transforms.push("waltz".into());
            }
        }
        Ok(out)
    }

    /// Summary statistics. The mean is accumulated over the steps in
    /// ascending node-index order (largest step first), which pins the
    /// floating-point result.
    pub fn stats(&self) -> ScheduleStats {
        let mut sorted = self.steps.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut acc = 0.0;
        for s in &sorted {
            acc += s;
        }
        let threshold = 2.0 / self.big_m;
        ScheduleStats {
            min_step: *sorted.last().unwrap(),
            max_step: sorted[0],
            mean_step: acc / sorted.len() as f64,
            count_above_2_over_m: self.steps.iter().filter(|&&s| s > threshold).count(),
        }
    }

    /// JSON with steps at 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut s = String::new();
        s.push_str("{\n");
        s.push_str(&format!("  \"m\": {},\n", fmt_g17(self.m)));
        s.push_str(&format!("  \"M\": {},\n", fmt_g17(self.big_m)));
        s.push_str(&format!("  \"T\": {},\n", self.horizon));
        s.push_str(&format!("  \"ordering\": \"{}\",\n", self.ordering.tag()));
        if let StepOrdering::Random { seed } = &self.ordering {
            s.push_str(&format!("  \"seed\": {seed},\n"));
        }
        if let StepOrdering::Explicit { permutation } = &self.ordering {
            let p: Vec<String> = permutation.iter().map(|i| i.to_string()).collect();
            s.push_str(&format!("  \"permutation\": [{}],\n", p.join(", ")));
        }
        if !self.transforms.is_empty() {
            let t: Vec<String> = self.transforms.iter().map(|x| format!("\"{x}\"")).collect();
            s.push_str(&format!("  \"transforms\": [{}],\n", t.join(", ")));
        }
        let steps: Vec<String> = self.steps.iter().map(|&x| fmt_g17(x)).collect();
        s.push_str(&format!("  \"steps\": [{}],\n", steps.join(", ")));
        s.push_str(&format!("  \"certified\": {}\n", self.certified));
        s.push('}');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ScheduleError> {
        #[derive(Deserialize)]
        struct Raw {
            m: f64,
            #[serde(rename = "M")]
            big_m: f64,
            #[serde(rename = "T")]
            horizon: usize,
            ordering: String,
            seed: Option<u64>,
            permutation: Option<Vec<usize>>,
            #[serde(default)]
            transforms: Vec<String>,
            steps: Vec<f64>,
            certified: bool,
        }
        let raw: Raw =
            serde_json::from_str(text).map_err(|e| ScheduleError::Json(e.to_string()))?;
        let ordering = match raw.ordering.as_str() {
            "fractal" => StepOrdering::Fractal,
            "reverse_fractal" => StepOrdering::ReverseFractal,
            "increasing" => StepOrdering::Increasing,
            "decreasing" => StepOrdering::Decreasing,
            "random" => StepOrdering::Random {
                seed: raw.seed.ok_or_else(|| {
                    ScheduleError::Json("random ordering requires a seed field".into())
                })?,
            },
            "explicit" => StepOrdering::Explicit {
                permutation: raw.permutation.ok_or_else(|| {
                    ScheduleError::Json("explicit ordering requires a permutation field".into())
                })?,
            },
            other => return Err(ScheduleError::Json(format!("unknown ordering '{other}'"))),
        };
        Ok(ScheduleSpec {
            m: raw.m,
            big_m: raw.big_m,
            horizon: raw.horizon,
            ordering,
            steps: raw.steps,
            certified: raw.certified,
            transforms: raw.transforms,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleStats {
    pub min_step: f64,
    pub max_step: f64,
    pub mean_step: f64,
    pub count_above_2_over_m: usize,
}

/// Cyclic `[eta_plus, eta_minus x n]` pattern repeated `cycles` times.
/// No norm bound covers it, so the result is marked uncertified.
pub fn spiky_schedule(
    eta_plus: f64,
    eta_minus: f64,
    n: usize,
    cycles: usize,
) -> Result<ScheduleSpec, ScheduleError> {
    if !(eta_minus > 0.0) || !(eta_plus >= eta_minus) {
        return Err(ScheduleError::InvalidArgument(
            "need eta_plus >= eta_minus > 0".into(),
        ));
    }
    if n < 1 || cycles < 1 {
        return Err(ScheduleError::InvalidArgument(
            "need n >= 1 and cycles >= 1".into(),
        ));
    }
    let mut steps = Vec::with_capacity(cycles * (n + 1));
    for _ in 0..cycles {
        steps.push(eta_plus);
        steps.extend(std::iter::repeat(eta_minus).take(n));
    }
    let len = steps.len();
    Ok(ScheduleSpec {
        m: 1.0 / eta_plus,
        big_m: 1.0 / eta_minus,
        horizon: len,
        ordering: StepOrdering::Explicit {
            permutation: (1..=len).collect(),
        },
        steps,
        certified: false,
        transforms: vec![format!("spiky({eta_plus},{eta_minus},{n},{cycles})")],
    })
}
