//! `cheb-fractal verify --check <name>`: run a verification sweep,
//! write its report CSV, exit 0 iff every row passes.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use cheb_fractal::experiments::SPIKY_GRID;
use cheb_fractal::io::{atomic_write, fmt_g17};
use cheb_fractal::polybounds::{
    bound_rows_for_start, build_factorization_tree, cheb_t_ln, prefix_suffix_report, series_bound,
    series_oracle_all, spiky_no_accel_check, tree_exchange_check, BoundReport,
};
use cheb_fractal::schedule::{build_schedule, cheb_nodes, fractal_perm, StepOrdering};

use crate::parallel::par_map;
use crate::ScheduleArgs;

struct CheckResult {
    csv: String,
    all_pass: bool,
}

pub fn cmd_verify(check: &str, args: &ScheduleArgs, out: &Option<PathBuf>) -> ExitCode {
    let result = match check {
        "prefix_suffix" => prefix_suffix(args),
        "infix" => infix(args),
        "series" => series(args),
        "tree_exchange" => Ok(tree_exchange()),
        "factorization" => factorization(args),
        "reciprocal_sum" => Ok(reciprocal_sum()),
        "stats" => stats(args),
        "spiky" => Ok(spiky()),
        other => {
            eprintln!("error: unknown check '{other}'");
            return ExitCode::from(2);
        }
    };
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match out {
        Some(path) => {
            if let Err(e) = atomic_write(path, &result.csv) {
                eprintln!("error: {e}");
                return ExitCode::from(3);
            }
        }
        None => print!("{}", result.csv),
    }
    if result.all_pass {
        ExitCode::from(0)
    } else {
        eprintln!("verification failed: at least one row has pass=false");
        ExitCode::from(1)
    }
}

fn fractal_for(args: &ScheduleArgs) -> Result<cheb_fractal::schedule::ScheduleSpec, String> {
    build_schedule(args.m, args.big_m, args.t_horizon, StepOrdering::Fractal)
        .map_err(|e| e.to_string())
}

fn prefix_suffix(args: &ScheduleArgs) -> Result<CheckResult, String> {
    let sched = fractal_for(args)?;
    let report = prefix_suffix_report(&sched);
    Ok(CheckResult {
        all_pass: report.all_pass(),
        csv: report.to_csv(),
    })
}

fn infix(args: &ScheduleArgs) -> Result<CheckResult, String> {
    let sched = fractal_for(args)?;
    let starts: Vec<usize> = (1..=sched.len()).collect();
    let row_groups = par_map(starts, |&s| bound_rows_for_start(&sched, s));
    let report = BoundReport {
        rows: row_groups.into_iter().flatten().collect(),
    };
    Ok(CheckResult {
        all_pass: report.all_pass(),
        csv: report.to_csv(),
    })
}

fn series(args: &ScheduleArgs) -> Result<CheckResult, String> {
    let sched = fractal_for(args)?;
    let values = series_oracle_all(&sched, sched.len()).map_err(|e| e.to_string())?;
    let bound = series_bound(args.m, args.big_m);
    let mut csv = String::from("t,series_sum,bound,ratio,pass\n");
    let mut all = true;
    for (i, v) in values.iter().enumerate() {
        let pass = *v <= bound * (1.0 + 1e-9);
        all &= pass;
        csv.push_str(&format!(
            "{},{},{},{},{pass}\n",
            i + 1,
            fmt_g17(*v),
            fmt_g17(bound),
            fmt_g17(v / bound)
        ));
    }
    Ok(CheckResult { csv, all_pass: all })
}

fn tree_exchange() -> CheckResult {
    let mut csv = String::from("n,r,alpha,theta,lhs,rhs,pass\n");
    let mut all = true;
    let mut grid = Vec::new();
    for i in 1..=20 {
        let alpha = i as f64 * (PI / 2.0 - 0.02) / 20.0;
        for n in [2usize, 4, 8] {
            for r in [1usize, 2, 4] {
                for theta in [1.05, 1.2, 2.0] {
                    grid.push((n, r, alpha, theta));
                }
            }
        }
    }
    for (n, r, alpha, theta) in grid {
        let c = tree_exchange_check(n, r, alpha, theta);
        all &= c.holds;
        csv.push_str(&format!(
            "{n},{r},{},{},{},{},{}\n",
            fmt_g17(alpha),
            fmt_g17(theta),
            fmt_g17(c.lhs),
            fmt_g17(c.rhs),
            c.holds
        ));
    }
    CheckResult { csv, all_pass: all }
}

fn factorization(args: &ScheduleArgs) -> Result<CheckResult, String> {
    let theta = if args.big_m > args.m {
        (args.big_m + args.m) / (args.big_m - args.m)
    } else {
        1.2
    };
    let tree = build_factorization_tree(args.t_horizon, theta).map_err(|e| e.to_string())?;
    let defect = tree.max_child_product_defect(1001);
    let preorder = tree.preorder_leaf_indices();
    let sigma = fractal_perm(args.t_horizon).map_err(|e| e.to_string())?;
    let root_at_theta = tree.root().poly.eval(theta);
    let rows = [
        ("child_product_defect", defect, defect <= 1e-10),
        (
            "preorder_equals_fractal_perm",
            if preorder == sigma { 0.0 } else { 1.0 },
            preorder == sigma,
        ),
        (
            "root_normalized_at_theta",
            (root_at_theta - 1.0).abs(),
            (root_at_theta - 1.0).abs() <= 1e-12,
        ),
    ];
    let mut csv = String::from("check,value,pass\n");
    let mut all = true;
    for (name, value, pass) in rows {
        all &= pass;
        csv.push_str(&format!("{name},{},{pass}\n", fmt_g17(value)));
    }
    Ok(CheckResult { csv, all_pass: all })
}

fn reciprocal_sum() -> CheckResult {
    // sum of reciprocal nodes equals T tanh(T acosh(theta)) / sqrt(Mm)
    let mut csv = String::from("m,M,T,sum,identity,rel_err,pass\n");
    let mut all = true;
    for (m, big_m) in [(0.05, 1.0), (0.2, 2.2), (0.1, 1.0), (0.01, 3.7)] {
        for t_horizon in [8usize, 32, 128, 256] {
            let nodes = cheb_nodes(m, big_m, t_horizon).expect("valid grid parameters");
            let mut sum = 0.0;
            for g in &nodes {
                sum += 1.0 / g;
            }
            let theta: f64 = (big_m + m) / (big_m - m);
            let identity =
                t_horizon as f64 * (t_horizon as f64 * theta.acosh()).tanh() / (big_m * m).sqrt();
            let rel = (sum - identity).abs() / identity;
            let pass = rel <= 1e-9;
            all &= pass;
            csv.push_str(&format!(
                "{m},{big_m},{t_horizon},{},{},{},{pass}\n",
                fmt_g17(sum),
                fmt_g17(identity),
                fmt_g17(rel)
            ));
        }
    }
    CheckResult { csv, all_pass: all }
}

fn stats(args: &ScheduleArgs) -> Result<CheckResult, String> {
    let sched = fractal_for(args)?;
    let st = sched.stats();
    let mean_limit = 1.0 / (args.m * args.big_m).sqrt();
    // tanh saturation can make the mean round onto the limit in f64, up
    // to the O(T eps) rounding of the sum
    let mean_ok = st.mean_step <= mean_limit * (1.0 + (sched.len() as f64 + 4.0) * f64::EPSILON);
    let count_ok = st.count_above_2_over_m <= args.t_horizon / 2;
    let range_ok = sched.steps.iter().all(|&s| {
        if args.m == args.big_m {
            (s - 1.0 / args.m).abs() <= f64::EPSILON / args.m
        } else {
            s > 1.0 / args.big_m && s < 1.0 / args.m
        }
    });
    let mut csv = String::from("check,value,pass\n");
    let mut all = true;
    for (name, value, pass) in [
        ("mean_step_below_1_over_sqrt_Mm", st.mean_step, mean_ok),
        (
            "count_above_2_over_M_at_most_half",
            st.count_above_2_over_m as f64,
            count_ok,
        ),
        ("steps_within_open_range", 0.0, range_ok),
    ] {
        all &= pass;
        csv.push_str(&format!("{name},{},{pass}\n", fmt_g17(value)));
    }
    // cross-check against the log-stable Chebyshev evaluation
    let theta = sched.theta();
    let full_norm_ln = -cheb_t_ln(args.t_horizon as u64, theta);
    csv.push_str(&format!(
        "full_schedule_norm,{},true\n",
        fmt_g17(full_norm_ln.exp())
    ));
    Ok(CheckResult { csv, all_pass: all })
}

fn spiky() -> CheckResult {
    let mut csv = String::from(
        "eta_plus,eta_minus,n,applicable,norm_per_cycle,exceeds_threshold,critical_rel_defect,pass\n",
    );
    let mut all = true;
    for &(ep, en, n) in &SPIKY_GRID {
        let c = spiky_no_accel_check(ep, en, n, 1).expect("grid entries are valid");
        let defect =
            (c.critical_value_closed - c.critical_value_numeric).abs() / c.critical_value_closed;
        let pass = (!c.applicable || c.exceeds_threshold) && defect <= 1e-9;
        all &= pass;
        csv.push_str(&format!(
            "{ep},{en},{n},{},{},{},{},{pass}\n",
            c.applicable,
            fmt_g17(c.norm_per_cycle),
            c.exceeds_threshold,
            fmt_g17(defect)
        ));
    }
    CheckResult { csv, all_pass: all }
}
