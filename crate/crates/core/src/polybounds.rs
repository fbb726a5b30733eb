//! Residual-polynomial norms and the closed-form bounds they are
//! verified against.
//!
//! For a schedule `eta_1..eta_T` the infix polynomial is
//! `p_{s:t}(lambda) = prod_{tau=s..t} (1 - eta_tau * lambda)`; its
//! uniform norm on `[m, M]` controls how perturbations entering at step
//! s propagate to step t. The grid oracle here reports a certified lower
//! bound on that norm (every reported value is an actual `|p|`
//! evaluation), which is the right direction for checking the
//! closed-form upper bounds.
//!
//! Bound conventions, where the source material is ambiguous, follow the
//! variant that is provable and numerically verified by the sweeps in
//! this crate's tests:
//! * `bits'(n)` drops the smallest index of the binary expansion.
//! * The prefix bound's bad-polynomial factor uses
//!   `2/(T_{2^j}(theta) - 1)`, the sharper of the two valid forms (it is
//!   always <= `(kappa_hat - 1)/4^j`), which also keeps
//!   `prefix_bound(t) <= kappa_hat * suffix_bound(t)`.
//! * A skewed polynomial gets the strong `2/(1+T_n(theta))` bound
//!   exactly when `cos(alpha) <= 0`, i.e. `alpha >= pi/2`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::schedule::ScheduleSpec;

#[derive(Debug, Error)]
pub enum PolyBoundsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Sweeps declare a row passing when `oracle <= bound * (1 + PASS_SLACK)`.
pub const PASS_SLACK: f64 = 1e-9;

/// Per-cycle norm threshold in the spiky no-acceleration check.
pub const SPIKY_THRESHOLD: f64 = 1.34;

// ---------------------------------------------------------------------
// Chebyshev polynomials
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChebKind {
    First,
    Second,
}

/// `T_n(z)` or `U_n(z)` by the three-term recurrence.
pub fn cheb_poly(kind: ChebKind, n: usize, z: f64) -> f64 {
    let (mut prev, mut cur) = match kind {
        ChebKind::First => (1.0, z),
        ChebKind::Second => (1.0, 2.0 * z),
    };
    if n == 0 {
        return prev;
    }
    for _ in 2..=n {
        (prev, cur) = (cur, 2.0 * z * cur - prev);
    }
    cur
}

/// `ln T_n(theta)` for `theta >= 1`, stable for any `n * acosh(theta)`
/// (the recurrence overflows past ~700).
pub fn cheb_t_ln(n: u64, theta: f64) -> f64 {
    debug_assert!(theta >= 1.0);
    if n == 0 || theta == 1.0 {
        return 0.0;
    }
    // acosh(1+d) = ln(1 + d + sqrt(2d + d^2)), accurate near 1
    let d = theta - 1.0;
    let a = (d + (2.0 * d + d * d).sqrt()).ln_1p();
    let na = n as f64 * a;
    // T_n = cosh(n a) = e^{na} (1 + e^{-2na}) / 2
    na + (-2.0 * na).exp().ln_1p() - std::f64::consts::LN_2
}

/// `2 / (1 + T_{2^j}(theta))`, the per-subtree contraction factor.
pub fn good_step_factor(j: u32, theta: f64) -> f64 {
    if theta.is_infinite() {
        return 0.0;
    }
    let lt = cheb_t_ln(1u64 << j, theta);
    let e = (-lt).exp();
    2.0 * e / (1.0 + e)
}

/// `2 / (T_{2^j}(theta) - 1)`, the bad-polynomial factor of the prefix
/// bound. Equals `kappa_hat - 1` at j = 0.
fn bad_step_factor(j: u32, theta: f64) -> f64 {
    if theta.is_infinite() {
        return 0.0;
    }
    let lt = cheb_t_ln(1u64 << j, theta);
    2.0 / lt.exp_m1()
}

// ---------------------------------------------------------------------
// Binary decompositions and the closed-form bounds
// ---------------------------------------------------------------------

/// Indices of the binary expansion of n, descending, and the same with
/// the smallest index removed. `bits(6) = [2, 1]`, `bits'(6) = [2]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitsDecomp {
    pub bits: Vec<u32>,
    pub bits_prime: Vec<u32>,
}

pub fn bits_decomp(n: usize) -> Result<BitsDecomp, PolyBoundsError> {
    if n < 1 {
        return Err(PolyBoundsError::InvalidArgument(
            "bits_decomp requires n >= 1".into(),
        ));
    }
    let mut bits = Vec::new();
    for j in (0..usize::BITS).rev() {
        if n & (1usize << j) != 0 {
            bits.push(j);
        }
    }
    let mut bits_prime = bits.clone();
    bits_prime.pop();
    Ok(BitsDecomp { bits, bits_prime })
}

/// Suffix bound `V(len)`: norm bound for the last `len` steps of the
/// fractal schedule. `V(0) = 1`, `V(len) <= 1`.
pub fn suffix_bound(len: usize, theta: f64) -> f64 {
    if len == 0 {
        return 1.0;
    }
    bits_decomp(len)
        .unwrap()
        .bits
        .iter()
        .map(|&j| good_step_factor(j, theta))
        .product()
}

/// Prefix bound `V'(t)`: norm bound for the first `t` steps of the
/// fractal schedule. `V'(0) = 1`, `V'(1) = kappa_hat - 1`, and
/// `V'(t) <= kappa_hat * V(t)` for all t.
///
/// `kappa_hat` is accepted for the degenerate `theta = inf` (m = M)
/// case; for finite theta the two are redundant
/// (`kappa_hat - 1 = 2/(theta - 1)`).
pub fn prefix_bound(t: usize, theta: f64, kappa_hat: f64) -> f64 {
    if t == 0 {
        return 1.0;
    }
    if theta.is_infinite() || kappa_hat == 1.0 {
        return 0.0;
    }
    let d = bits_decomp(t).unwrap();
    let jk = *d.bits.last().unwrap();
    let mut v = bad_step_factor(jk, theta);
    for &j in &d.bits_prime {
        v *= good_step_factor(j, theta);
    }
    v
}

/// The split index `zeta` for the infix bound: the unique index in
/// `[s-1, t]` with maximal 2-adic valuation (0 counts as maximal), i.e.
/// the boundary between the two subtrees under the lowest common
/// ancestor of the range.
pub fn split_index_zeta(s: usize, t: usize) -> usize {
    debug_assert!(1 <= s && s <= t);
    let val2 = |x: usize| -> u32 {
        if x == 0 {
            u32::MAX
        } else {
            x.trailing_zeros()
        }
    };
    let mut best = s - 1;
    let mut best_v = val2(s - 1);
    for z in s..=t {
        let v = val2(z);
        if v > best_v {
            best_v = v;
            best = z;
        }
    }
    best
}

/// Infix bound for `p_{s:t}` of the fractal schedule:
/// `V(zeta+1-s) * V'(t-zeta)` with the split at [`split_index_zeta`].
pub fn infix_bound(s: usize, t: usize, theta: f64, kappa_hat: f64) -> f64 {
    let zeta = split_index_zeta(s, t);
    suffix_bound(zeta + 1 - s, theta) * prefix_bound(t - zeta, theta, kappa_hat)
}

/// The T-independent bound on `sum_{t'=s..t} ||p_{t':t}||`:
/// `18 (M/m - 1) ((M+m)/(2m))^{1/ln 4} (1 + ln((M+m)/(2m)))`.
pub fn series_bound(m: f64, big_m: f64) -> f64 {
    let r = (big_m + m) / (2.0 * m);
    18.0 * (big_m / m - 1.0) * r.powf(1.0 / 4f64.ln()) * (1.0 + r.ln())
}

// ---------------------------------------------------------------------
// Grid oracle
// ---------------------------------------------------------------------

/// `|prod (1 - eta * lambda)|` at a point.
fn poly_abs(steps: &[f64], lambda: f64) -> f64 {
    let mut v = 1.0f64;
    for &eta in steps {
        v *= (1.0 - eta * lambda).abs();
    }
    v
}

/// Golden-section maximization of `|p|` on `[lo, hi]`.
fn polish_max(steps: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = poly_abs(steps, c);
    let mut fd = poly_abs(steps, d);
    let mut best = fc.max(fd);
    for _ in 0..60 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = poly_abs(steps, c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = poly_abs(steps, d);
        }
        best = best.max(fc.max(fd));
    }
    best
}

/// Chebyshev–Lobatto abscissas on `[m, M]`, descending from M to m,
/// `intervals + 1` points including both endpoints.
fn lobatto_grid(m: f64, big_m: f64, intervals: usize) -> Vec<f64> {
    let c = 0.5 * (big_m + m);
    let r = 0.5 * (big_m - m);
    (0..=intervals)
        .map(|i| c + r * (i as f64 * PI / intervals as f64).cos())
        .collect()
}

/// Grid intervals for a schedule of the given length: at least 4096 and
/// at least 64 per step, and a multiple of the length so the grid hits
/// the extrema of complete Chebyshev products exactly.
fn grid_intervals(len: usize) -> usize {
    let base = 4096usize.max(64 * len.max(1));
    base.div_ceil(len.max(1)) * len.max(1)
}

/// Max of `|p|` over the grid, then a golden-section polish around every
/// near-maximal grid bracket. All reported values are true evaluations
/// of `|p|` at points of `[m, M]`, so the result is a certified lower
/// bound on the norm, convergent under refinement.
fn norm_oracle_steps(steps: &[f64], m: f64, big_m: f64, intervals: usize) -> f64 {
    if steps.is_empty() {
        return 1.0;
    }
    if big_m <= m {
        return poly_abs(steps, m);
    }
    let grid = lobatto_grid(m, big_m, intervals);
    let vals: Vec<f64> = grid.iter().map(|&l| poly_abs(steps, l)).collect();
    let mut best = 0.0f64;
    for &v in &vals {
        best = best.max(v);
    }
    if !best.is_finite() {
        return best;
    }
    let cutoff = 0.99 * best;
    let mut polished = best;
    let n = vals.len();
    for i in 0..n {
        let is_local_max =
            (i == 0 || vals[i] >= vals[i - 1]) && (i + 1 == n || vals[i] >= vals[i + 1]);
        if is_local_max && vals[i] >= cutoff {
            let lo = grid[(i + 1).min(n - 1)];
            let hi = grid[i.saturating_sub(1)];
            polished = polished.max(polish_max(steps, lo, hi));
        }
    }
    polished
}

/// Uniform norm of the infix `p_{s:t}` of `schedule` on `[m, M]`,
/// 1-based inclusive indices; `s = t + 1` encodes the empty product
/// (norm exactly 1).
pub fn infix_norm_oracle(
    schedule: &ScheduleSpec,
    s: usize,
    t: usize,
    m: f64,
    big_m: f64,
) -> Result<f64, PolyBoundsError> {
    let len = schedule.len();
    if s < 1 || s > t + 1 || t > len {
        return Err(PolyBoundsError::InvalidArgument(format!(
            "infix range ({s}, {t}) invalid for schedule of length {len}"
        )));
    }
    if s == t + 1 {
        return Ok(1.0);
    }
    Ok(norm_oracle_steps(
        &schedule.steps[s - 1..t],
        m,
        big_m,
        grid_intervals(len),
    ))
}

/// `sum_{t'=1..t} ||p_{t':t}||` with the oracle norm, the cumulative
/// noise-amplification series anchored at step t.
pub fn series_oracle(schedule: &ScheduleSpec, t: usize) -> Result<f64, PolyBoundsError> {
    Ok(series_oracle_all(schedule, t)?[t - 1])
}

/// Series values for every anchor `1..=t_max`, sharing work across
/// anchors. Element `t-1` is `series_oracle(schedule, t)`.
pub fn series_oracle_all(
    schedule: &ScheduleSpec,
    t_max: usize,
) -> Result<Vec<f64>, PolyBoundsError> {
    let len = schedule.len();
    if t_max < 1 || t_max > len {
        return Err(PolyBoundsError::InvalidArgument(format!(
            "series anchor {t_max} out of range 1..={len}"
        )));
    }
    let (m, big_m) = (schedule.m, schedule.big_m);
    let intervals = grid_intervals(len);
    let degenerate = big_m <= m;
    let grid = if degenerate {
        vec![m]
    } else {
        lobatto_grid(m, big_m, intervals)
    };
    let mut out = Vec::with_capacity(t_max);
    let mut prod = vec![1.0f64; grid.len()];
    let mut scratch: Vec<f64> = Vec::new();
    for t in 1..=t_max {
        // extend every window [t'..t-1] to [t'..t]; windows are rebuilt
        // per anchor, so recompute the running products downward
        prod.iter_mut().for_each(|v| *v = 1.0);
        let mut sum = 0.0f64;
        for tp in (1..=t).rev() {
            let eta = schedule.steps[tp - 1];
            let mut gmax = 0.0f64;
            for (p, &l) in prod.iter_mut().zip(&grid) {
                *p *= (1.0 - eta * l).abs();
                gmax = gmax.max(*p);
            }
            // polish the bracket around the grid argmax
            if !degenerate && gmax.is_finite() && gmax > 0.0 {
                scratch.clear();
                scratch.extend_from_slice(&schedule.steps[tp - 1..t]);
                let n = grid.len();
                let mut argmax = 0;
                for (i, p) in prod.iter().enumerate() {
                    if *p > prod[argmax] {
                        argmax = i;
                    }
                }
                let lo = grid[(argmax + 1).min(n - 1)];
                let hi = grid[argmax.saturating_sub(1)];
                gmax = gmax.max(polish_max(&scratch, lo, hi));
            }
            sum += gmax;
        }
        out.push(sum);
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// Skewed Chebyshev polynomials and the factorization tree
// ---------------------------------------------------------------------

/// `P_{n,alpha}(z) = (T_n(z) - cos alpha) / (T_n(theta) - cos alpha)`,
/// a node of the binary factorization tree of the full residual
/// polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewedPoly {
    pub n: usize,
    pub alpha: f64,
    pub theta: f64,
}

impl SkewedPoly {
    pub fn new(n: usize, alpha: f64, theta: f64) -> Self {
        Self { n, alpha, theta }
    }

    /// The strong `2/(1+T_n(theta))` bound applies exactly when
    /// `cos(alpha) <= 0`.
    pub fn is_good(&self) -> bool {
        self.alpha >= PI / 2.0
    }

    pub fn eval(&self, z: f64) -> f64 {
        let ca = self.alpha.cos();
        (cheb_poly(ChebKind::First, self.n, z) - ca)
            / (cheb_poly(ChebKind::First, self.n, self.theta) - ca)
    }

    /// Exact uniform norm on `[-1, 1]`:
    /// `(1 + |cos alpha|) / (T_n(theta) - cos alpha)`.
    pub fn norm_exact(&self) -> f64 {
        let ca = self.alpha.cos();
        (1.0 + ca.abs()) / (cheb_poly(ChebKind::First, self.n, self.theta) - ca)
    }

    /// Closed-form norm bound: `2/(1+T_n(theta))` when good,
    /// `2/(n^2 (theta-1))` when bad.
    pub fn norm_bound(&self) -> f64 {
        if self.is_good() {
            2.0 / (1.0 + cheb_poly(ChebKind::First, self.n, self.theta))
        } else {
            2.0 / (self.n as f64 * self.n as f64 * (self.theta - 1.0))
        }
    }
}

pub fn skewed_eval(n: usize, alpha: f64, theta: f64, z: f64) -> f64 {
    SkewedPoly::new(n, alpha, theta).eval(z)
}

pub fn skewed_norm_bound(n: usize, alpha: f64, theta: f64) -> f64 {
    SkewedPoly::new(n, alpha, theta).norm_bound()
}

/// Both sides of the tree-exchange inequality
/// `B_{nr,alpha} B_{r,(pi-alpha)/n} <= B_{nr,pi-alpha} B_{r,alpha/n}`,
/// computed from the exact norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn tree_exchange_check(n: usize, r: usize, alpha: f64, theta: f64) -> ExchangeCheck {
    let lhs = SkewedPoly::new(n * r, alpha, theta).norm_exact()
        * SkewedPoly::new(r, (PI - alpha) / n as f64, theta).norm_exact();
    let rhs = SkewedPoly::new(n * r, PI - alpha, theta).norm_exact()
        * SkewedPoly::new(r, alpha / n as f64, theta).norm_exact();
    ExchangeCheck {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-12),
    }
}

/// Complete binary factorization tree of the degree-T residual
/// polynomial: root `P_{T,pi/2}`, children `P_{n/2,alpha/2}` (left) and
/// `P_{n/2,pi-alpha/2}` (right). The pre-order sequence of leaf root
/// indices is the fractal permutation.
#[derive(Debug, Clone)]
pub struct FactorTree {
    pub horizon: usize,
    pub theta: f64,
    pub nodes: Vec<TreeNode>,
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub poly: SkewedPoly,
    pub left: Option<usize>,
    pub right: Option<usize>,
}

pub fn build_factorization_tree(
    t_horizon: usize,
    theta: f64,
) -> Result<FactorTree, PolyBoundsError> {
    if t_horizon == 0 || !t_horizon.is_power_of_two() {
        return Err(PolyBoundsError::InvalidArgument(format!(
            "tree horizon {t_horizon} is not a power of 2"
        )));
    }
    let mut nodes = Vec::new();
    build_node(&mut nodes, t_horizon, PI / 2.0, theta);
    Ok(FactorTree {
        horizon: t_horizon,
        theta,
        nodes,
    })
}

fn build_node(nodes: &mut Vec<TreeNode>, n: usize, alpha: f64, theta: f64) -> usize {
    let idx = nodes.len();
    nodes.push(TreeNode {
        poly: SkewedPoly::new(n, alpha, theta),
        left: None,
        right: None,
    });
    if n > 1 {
        let l = build_node(nodes, n / 2, alpha / 2.0, theta);
        let r = build_node(nodes, n / 2, PI - alpha / 2.0, theta);
        nodes[idx].left = Some(l);
        nodes[idx].right = Some(r);
    }
    idx
}

impl FactorTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    /// Node indices (1-based) of the leaves in pre-order; equals
    /// `fractal_perm(T)`. A degree-1 leaf `P_{1,alpha}` has its single
    /// root at `z = cos(alpha)`, which is node `t = alpha T / pi + 1/2`.
    pub fn preorder_leaf_indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.horizon);
        self.walk_leaves(0, &mut out);
        out
    }

    fn walk_leaves(&self, idx: usize, out: &mut Vec<usize>) {
        let node = &self.nodes[idx];
        match (node.left, node.right) {
            (Some(l), Some(r)) => {
                self.walk_leaves(l, out);
                self.walk_leaves(r, out);
            }
            _ => {
                let t = node.poly.alpha * self.horizon as f64 / PI + 0.5;
                out.push(t.round() as usize);
            }
        }
    }

    /// Max over a z-grid of `|node - left*right|` relative defect, for
    /// every internal node.
    pub fn max_child_product_defect(&self, grid_points: usize) -> f64 {
        let mut worst = 0.0f64;
        for node in &self.nodes {
            if let (Some(l), Some(r)) = (node.left, node.right) {
                for i in 0..grid_points {
                    let z = -1.0 + 2.0 * i as f64 / (grid_points - 1) as f64;
                    let a = node.poly.eval(z);
                    let b = self.nodes[l].poly.eval(z) * self.nodes[r].poly.eval(z);
                    worst = worst.max((a - b).abs() / a.abs().max(1.0));
                }
            }
        }
        worst
    }
}

// ---------------------------------------------------------------------
// Convergence envelopes
// ---------------------------------------------------------------------

/// Full-schedule convergence envelope: `rho` and
/// `2 rho^T / (1 + rho^{2T})`, the norm of the degree-T Chebyshev
/// residual polynomial on `[m, M]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub rho: f64,
    pub final_bound: f64,
}

pub fn convergence_envelope(
    m: f64,
    big_m: f64,
    t_horizon: usize,
) -> Result<Envelope, PolyBoundsError> {
    if !(m > 0.0) || big_m < m || t_horizon < 1 {
        return Err(PolyBoundsError::InvalidArgument(
            "need 0 < m <= M and T >= 1".into(),
        ));
    }
    let rho = (big_m.sqrt() - m.sqrt()) / (big_m.sqrt() + m.sqrt());
    let rt = rho.powi(t_horizon as i32);
    Ok(Envelope {
        rho,
        final_bound: 2.0 * rt / (1.0 + rt * rt),
    })
}

/// Partial acceleration when the node interval omits the lower spectrum
/// (`lambda_min <= m`): rate `1 - phi_inv` and envelope
/// `2 (1 - phi_inv)^T`. At `m = lambda_min`, `1 - phi_inv = rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialAccel {
    pub phi_inv: f64,
    pub final_bound: f64,
}

pub fn partial_accel(
    lambda_min: f64,
    m: f64,
    big_m: f64,
    t_horizon: usize,
) -> Result<PartialAccel, PolyBoundsError> {
    if !(lambda_min > 0.0) || lambda_min > m || m > big_m || t_horizon < 1 {
        return Err(PolyBoundsError::InvalidArgument(
            "need 0 < lambda_min <= m <= M and T >= 1".into(),
        ));
    }
    let phi_inv = 2.0
        * (lambda_min + (big_m * m).sqrt() - ((big_m - lambda_min) * (m - lambda_min)).sqrt())
        / (big_m.sqrt() + m.sqrt()).powi(2);
    Ok(PartialAccel {
        phi_inv,
        final_bound: 2.0 * (1.0 - phi_inv).powi(t_horizon as i32),
    })
}

/// One-cycle analysis of the `[eta_plus, eta_minus x n]` schedule on the
/// interval `[1/eta_plus, 1/eta_minus]`: per-cycle norm (grid oracle),
/// whether it exceeds [`SPIKY_THRESHOLD`], and the interior critical
/// point against its closed form. Outside the no-acceleration regime
/// (`eta_plus >= 10 eta_minus`, `n <= 0.1 eta_plus/eta_minus`) the
/// result is flagged not applicable rather than rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikyCheck {
    pub applicable: bool,
    pub norm_per_cycle: f64,
    pub norm_all_cycles: f64,
    pub exceeds_threshold: bool,
    pub lambda_star: f64,
    pub critical_value_closed: f64,
    pub critical_value_numeric: f64,
}

pub fn spiky_no_accel_check(
    eta_plus: f64,
    eta_minus: f64,
    n: usize,
    m_cycles: usize,
) -> Result<SpikyCheck, PolyBoundsError> {
    if !(eta_minus > 0.0) || eta_plus < eta_minus || n < 1 || m_cycles < 1 {
        return Err(PolyBoundsError::InvalidArgument(
            "need eta_plus >= eta_minus > 0, n >= 1, cycles >= 1".into(),
        ));
    }
    let ratio = eta_plus / eta_minus;
    let applicable = ratio >= 10.0 && (n as f64) <= 0.1 * ratio;
    let mut steps = Vec::with_capacity(n + 1);
    steps.push(eta_plus);
    steps.extend(std::iter::repeat(eta_minus).take(n));
    let (lo, hi) = (1.0 / eta_plus, 1.0 / eta_minus);
    let norm = norm_oracle_steps(&steps, lo, hi, grid_intervals(n + 1));
    let nf = n as f64;
    let lambda_star = (eta_plus + nf * eta_minus) / ((nf + 1.0) * eta_plus * eta_minus);
    let closed = (ratio - 1.0) / (nf + 1.0)
        * ((1.0 - 1.0 / ratio) * (1.0 - 1.0 / (nf + 1.0))).powi(n as i32);
    Ok(SpikyCheck {
        applicable,
        norm_per_cycle: norm,
        norm_all_cycles: norm.powi(m_cycles as i32),
        exceeds_threshold: norm > SPIKY_THRESHOLD,
        lambda_star,
        critical_value_closed: closed,
        critical_value_numeric: poly_abs(&steps, lambda_star),
    })
}

// ---------------------------------------------------------------------
// Bound report sweeps
// ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub s: usize,
    pub t: usize,
    pub oracle_norm: f64,
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn worst_ratio(&self) -> f64 {
        self.rows.iter().fold(0.0, |a, r| a.max(r.ratio))
    }

    pub fn to_csv(&self) -> String {
        use crate::io::fmt_g17;
        let mut s = String::from("s,t,oracle_norm,bound,ratio,pass\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.s,
                r.t,
                fmt_g17(r.oracle_norm),
                fmt_g17(r.bound),
                fmt_g17(r.ratio),
                r.pass
            ));
        }
        s
    }
}

/// The infix sweep rows for one start index `s` (all `t` from `s` to the
/// schedule length), sharing the running grid products across `t`.
/// Start indices are independent, so sweeps parallelize over `s`.
pub fn bound_rows_for_start(schedule: &ScheduleSpec, s: usize) -> Vec<BoundRow> {
    let len = schedule.len();
    debug_assert!(1 <= s && s <= len);
    let (m, big_m) = (schedule.m, schedule.big_m);
    let theta = schedule.theta();
    let kappa_hat = schedule.kappa_hat();
    let grid = lobatto_grid(m, big_m, grid_intervals(len));
    let mut rows = Vec::with_capacity(len + 1 - s);
    let mut prod = vec![1.0f64; grid.len()];
    for t in s..=len {
        let eta = schedule.steps[t - 1];
        let mut gmax = 0.0f64;
        let mut argmax = 0usize;
        for (i, (p, &l)) in prod.iter_mut().zip(&grid).enumerate() {
            *p *= (1.0 - eta * l).abs();
            if *p > gmax {
                gmax = *p;
                argmax = i;
            }
        }
        let steps = &schedule.steps[s - 1..t];
        let mut oracle = gmax;
        if oracle.is_finite() {
            let n = grid.len();
            let lo = grid[(argmax + 1).min(n - 1)];
            let hi = grid[argmax.saturating_sub(1)];
            oracle = oracle.max(polish_max(steps, lo, hi));
        }
        let bound = infix_bound(s, t, theta, kappa_hat);
        let ratio = oracle / bound;
        rows.push(BoundRow {
            s,
            t,
            oracle_norm: oracle,
            bound,
            ratio,
            pass: ratio <= 1.0 + PASS_SLACK,
        });
    }
    rows
}

/// Exhaustive infix sweep over every `1 <= s <= t <= len`, comparing the
/// grid oracle against [`infix_bound`]. Rows ordered by `(s, t)`.
pub fn bound_report(schedule: &ScheduleSpec) -> BoundReport {
    let mut rows = Vec::new();
    for s in 1..=schedule.len() {
        rows.extend(bound_rows_for_start(schedule, s));
    }
    BoundReport { rows }
}

/// Prefix/suffix sweep rows: for every t the prefix `p_{1:t}` against
/// `V'(t)` and for every s the suffix `p_{s:T}` against `V(T+1-s)`.
pub fn prefix_suffix_report(schedule: &ScheduleSpec) -> BoundReport {
    let len = schedule.len();
    let theta = schedule.theta();
    let kappa_hat = schedule.kappa_hat();
    let mut rows = Vec::with_capacity(2 * len);
    for t in 1..=len {
        let oracle =
            infix_norm_oracle(schedule, 1, t, schedule.m, schedule.big_m).expect("valid range");
        let bound = prefix_bound(t, theta, kappa_hat);
        rows.push(BoundRow {
            s: 1,
            t,
            oracle_norm: oracle,
            bound,
            ratio: oracle / bound,
            pass: oracle <= bound * (1.0 + PASS_SLACK),
        });
    }
    for s in 1..=len {
        let oracle =
            infix_norm_oracle(schedule, s, len, schedule.m, schedule.big_m).expect("valid range");
        let bound = suffix_bound(len + 1 - s, theta);
        rows.push(BoundRow {
            s,
            t: len,
            oracle_norm: oracle,
            bound,
            ratio: oracle / bound,
            pass: oracle <= bound * (1.0 + PASS_SLACK),
        });
    }
    BoundReport { rows }
}
