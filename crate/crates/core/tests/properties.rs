//! Property tests for the schedule and bound invariants.

use proptest::prelude::*;

use cheb_fractal::linalg::SymMatrix;
use cheb_fractal::optimize::{run_gd, GdOptions};
use cheb_fractal::polybounds::{good_step_factor, infix_bound, infix_norm_oracle, PASS_SLACK};
use cheb_fractal::problems::{make_quadratic, NoiseModel};
use cheb_fractal::schedule::{build_schedule, cheb_nodes, fractal_perm, StepOrdering};

/// Hierarchy: the T/2^i largest steps of the fractal schedule sit at
/// positions 1 + 2^i (tau - 1).
#[test]
fn fractal_hierarchy() {
    for log_t in 1..=7u32 {
        let t = 1usize << log_t;
        let sched = build_schedule(0.05, 1.0, t, StepOrdering::Fractal).unwrap();
        let mut order: Vec<usize> = (0..t).collect();
        order.sort_by(|&a, &b| sched.steps[b].partial_cmp(&sched.steps[a]).unwrap());
        for i in 0..=log_t {
            let k = t >> i;
            let mut top: Vec<usize> = order[..k].iter().map(|&p| p + 1).collect();
            top.sort_unstable();
            let expect: Vec<usize> = (0..k).map(|tau| 1 + (tau << i)).collect();
            assert_eq!(top, expect, "T={t} i={i}");
        }
    }
}

/// Self-similarity: the stride-2^i subsequence has the rank order of
/// the fractal permutation of its own length.
#[test]
fn fractal_self_similarity() {
    for log_t in 1..=7u32 {
        let t = 1usize << log_t;
        let perm = fractal_perm(t).unwrap();
        for i in 0..=log_t {
            let sub: Vec<usize> = (0..(t >> i)).map(|tau| perm[tau << i]).collect();
            // compress node indices to ranks 1..len (1 = largest step =
            // smallest node index)
            let mut sorted = sub.clone();
            sorted.sort_unstable();
            let ranks: Vec<usize> = sub
                .iter()
                .map(|v| sorted.binary_search(v).unwrap() + 1)
                .collect();
            assert_eq!(ranks, fractal_perm(t >> i).unwrap(), "T={t} i={i}");
        }
    }
}

/// The permutation is a bijection on 1..=T for every T = 2^k, k <= 16.
#[test]
fn fractal_perm_bijection_up_to_2_pow_16() {
    for k in 0..=16u32 {
        let t = 1usize << k;
        let perm = fractal_perm(t).unwrap();
        assert_eq!(perm.len(), t);
        assert_eq!(perm[0], 1, "sigma_T(1) = 1");
        let mut seen = vec![false; t + 1];
        for &v in &perm {
            assert!(v >= 1 && v <= t && !seen[v]);
            seen[v] = true;
        }
    }
}

/// Series sum within a complete subtree: for N = 2^k the sum of
/// suffix-bound products is at most
/// exp(1/(1+delta)) ((1+delta)/delta)^(1/ln 4).
#[test]
fn subtree_series_sum_bound() {
    for &delta in &[0.01f64, 0.1, 1.0] {
        let theta = 1.0 + delta;
        let rhs = (1.0 / (1.0 + delta)).exp() * ((1.0 + delta) / delta).powf(1.0 / 4f64.ln());
        for k in 1..=10u32 {
            let n = 1usize << k;
            let mut sum = 0.0;
            for i in 1..=n {
                let mut term = 1.0;
                let mut rem = n + 1 - i;
                while rem > 0 {
                    let j = (usize::BITS - 1 - rem.leading_zeros()) as u32;
                    term *= good_step_factor(j, theta);
                    rem -= 1usize << j;
                }
                sum += term;
            }
            assert!(sum <= rhs, "delta={delta} N={n}: {sum} > {rhs}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Every step lies strictly inside (1/M, 1/m) when m < M.
    #[test]
    fn step_range_bound(
        m in 0.01f64..1.0,
        gap in 0.05f64..10.0,
        log_t in 0u32..8,
    ) {
        let big_m = m + gap;
        let t = 1usize << log_t;
        let sched = build_schedule(m, big_m, t, StepOrdering::Fractal).unwrap();
        for &s in &sched.steps {
            prop_assert!(s > 1.0 / big_m && s < 1.0 / m);
        }
    }

    /// Reciprocal node sum identity at 1e-9 relative over an (m, M, T)
    /// grid.
    #[test]
    fn reciprocal_sum_identity(
        m in 0.001f64..1.0,
        gap in 0.01f64..5.0,
        t in 1usize..300,
    ) {
        let big_m = m + gap;
        let nodes = cheb_nodes(m, big_m, t).unwrap();
        let mut sum = 0.0;
        for g in &nodes {
            sum += 1.0 / g;
        }
        let theta: f64 = (big_m + m) / (big_m - m);
        let identity = t as f64 * (t as f64 * theta.acosh()).tanh() / (big_m * m).sqrt();
        prop_assert!((sum - identity).abs() <= 1e-9 * identity,
            "sum {sum} vs identity {identity}");
    }

    /// Mean step stays at or below 1/sqrt(Mm) (strictly below in exact
    /// arithmetic; tanh saturation can land on the limit in f64).
    #[test]
    fn mean_step_below_limit(
        m in 0.01f64..1.0,
        gap in 0.05f64..5.0,
        log_t in 1u32..8,
    ) {
        let big_m = m + gap;
        let sched = build_schedule(m, big_m, 1usize << log_t, StepOrdering::Fractal).unwrap();
        let st = sched.stats();
        let limit = 1.0 / (m * big_m).sqrt();
        // tanh(T acosh(theta)) saturates to 1 well below f64 resolution,
        // so the computed mean can sit on the limit up to the O(T eps)
        // rounding of the sum itself
        let slack = (sched.len() as f64 + 4.0) * f64::EPSILON;
        prop_assert!(st.mean_step <= limit * (1.0 + slack));
        prop_assert!(st.count_above_2_over_m <= sched.len() / 2);
    }

    /// Bounded noise kinds respect their norm budget exactly.
    #[test]
    fn noise_contract(eps in 1e-8f64..1.0, t in 1usize..100, seed in 0u64..1000) {
        let x = vec![1.0, -2.0, 0.5];
        let xs = vec![0.0, 0.0, 0.0];
        let adv = NoiseModel::BoundedAdversarial { epsilon: eps, seed };
        let xi = adv.xi(t, &x, Some(&xs), 0.7);
        let norm: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(norm <= eps * (1.0 + 1e-12));
        let gn = NoiseModel::GradientNoise { epsilon: eps, seed };
        let xi = gn.xi(t, &x, None, 0.7);
        let norm: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(norm <= 0.7 * eps * (1.0 + 1e-12));
    }

    /// Infix oracle norms never exceed the closed-form bound on random
    /// fractal schedules and ranges.
    #[test]
    fn infix_oracle_below_bound(
        m in 0.02f64..0.5,
        gap in 0.5f64..3.0,
        log_t in 2u32..6,
        s_frac in 0.0f64..1.0,
        t_frac in 0.0f64..1.0,
    ) {
        let big_m = m + gap;
        let t_horizon = 1usize << log_t;
        let sched = build_schedule(m, big_m, t_horizon, StepOrdering::Fractal).unwrap();
        let s = 1 + (s_frac * (t_horizon - 1) as f64) as usize;
        let t = s + (t_frac * (t_horizon - s) as f64) as usize;
        let oracle = infix_norm_oracle(&sched, s, t, m, big_m).unwrap();
        let bound = infix_bound(s, t, sched.theta(), sched.kappa_hat());
        prop_assert!(oracle <= bound * (1.0 + PASS_SLACK),
            "(s,t)=({s},{t}): {oracle} > {bound}");
    }

    /// Identical inputs and seeds give bit-identical trajectories.
    #[test]
    fn run_determinism(seed in 0u64..1000, sigma in 0.0f64..0.1) {
        let p = make_quadratic(SymMatrix::from_diag(&[0.5, 1.0, 2.0]), vec![1.0, -1.0, 0.5])
            .unwrap();
        let sched = build_schedule(0.4, 2.5, 8, StepOrdering::Fractal).unwrap();
        let noise = NoiseModel::IidGaussian { sigma, seed };
        let a = run_gd(&p, &sched, &[0.1, 0.2, 0.3], &noise, GdOptions::default()).unwrap();
        let b = run_gd(&p, &sched, &[0.1, 0.2, 0.3], &noise, GdOptions::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    /// Schedule JSON round-trips exactly through the 17-digit format.
    #[test]
    fn schedule_json_roundtrip(
        m in 0.01f64..1.0,
        gap in 0.0f64..5.0,
        log_t in 0u32..7,
        seed in 0u64..100,
    ) {
        let big_m = m + gap;
        let sched = build_schedule(m, big_m, 1usize << log_t,
            StepOrdering::Random { seed }).unwrap();
        let back = cheb_fractal::schedule::ScheduleSpec::from_json(&sched.to_json()).unwrap();
        prop_assert_eq!(back, sched);
    }
}
