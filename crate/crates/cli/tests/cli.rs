//! End-to-end tests of the binary's surface: flags, exit codes and
//! output formats.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cheb-fractal"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).to_string()
}

fn tmpdir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("cheb_fractal_cli_{name}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn gen_reference_schedule() {
    let out = run(&[
        "gen", "--m", "0.1", "--M", "1", "--T", "8", "--order", "fractal",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("\"ordering\": \"fractal\""));
    assert!(text.contains("9.2041516326372648e0"));
    // permuted steps start 9.20, 1.01
    let steps_start = text.find("\"steps\": [").unwrap();
    let arr = &text[steps_start..];
    assert!(arr.starts_with("\"steps\": [9.2041516326372648e0, 1.0087220400175081e0"));
}

#[test]
fn gen_constant_schedule() {
    let out = run(&["gen", "--m", "1", "--M", "1", "--T", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.matches("1.0000000000000000e0").count(), 6); // m, M, 4 steps
}

#[test]
fn gen_rejects_non_power_of_two_horizon() {
    let out = run(&["gen", "--T", "6", "--order", "fractal"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("T must be a power of 2"), "{err}");
}

#[test]
fn run_is_byte_identical_under_fixed_seed() {
    let a = run(&[
        "run",
        "--fixture",
        "path-laplacian",
        "--d",
        "20",
        "--m",
        "0.2",
        "--M",
        "2.2",
        "--T",
        "8",
        "--noise",
        "gaussian",
        "--noise-param",
        "0.01",
        "--seed",
        "99",
    ]);
    let b = run(&[
        "run",
        "--fixture",
        "path-laplacian",
        "--d",
        "20",
        "--m",
        "0.2",
        "--M",
        "2.2",
        "--T",
        "8",
        "--noise",
        "gaussian",
        "--noise-param",
        "0.01",
        "--seed",
        "99",
    ]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).starts_with("t,eta,residual_norm,obj_gap,grad_norm,xi_norm\n"));
}

#[test]
fn run_logcosh_exceeds_envelope() {
    // m=0.01, M=5, T=32, x1=2: final |x| above the envelope value 0.2274
    let out = run(&[
        "run",
        "--fixture",
        "logcosh",
        "--m",
        "0.01",
        "--M",
        "5",
        "--T",
        "32",
        "--x1",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let last = text.lines().last().unwrap();
    let fields: Vec<&str> = last.split(',').collect();
    assert_eq!(fields[0], "32");
    let final_residual: f64 = fields[2].parse().unwrap();
    assert!(final_residual > 0.2274, "{final_residual}");
}

#[test]
fn run_constant_step_decays_monotonically() {
    let out = run(&[
        "run",
        "--fixture",
        "path-laplacian",
        "--d",
        "30",
        "--m",
        "1.1",
        "--M",
        "1.1",
        "--T",
        "16",
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let residuals: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(residuals.len(), 17);
    for w in residuals.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "{w:?}");
    }
}

#[test]
fn run_unresolvable_fixture_exits_3() {
    let out = run(&["run", "--fixture", "no_such_file.json", "--T", "4"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn run_extended_precision_quadratic() {
    let out = run(&[
        "run",
        "--fixture",
        "path-laplacian",
        "--d",
        "10",
        "--m",
        "0.2",
        "--M",
        "2.2",
        "--T",
        "8",
        "--precision",
        "extended",
        "--seed",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    // extended mode refuses noisy runs
    let out = run(&[
        "run",
        "--fixture",
        "path-laplacian",
        "--d",
        "10",
        "--T",
        "8",
        "--precision",
        "extended",
        "--noise",
        "gaussian",
        "--noise-param",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_infix_row_count_and_exit() {
    let out = run(&[
        "verify", "--check", "infix", "--T", "16", "--m", "0.05", "--M", "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 137); // header + 136 pairs
    assert!(text.lines().skip(1).all(|l| l.ends_with("true")));
}

#[test]
fn verify_checks_all_pass() {
    for check in [
        "prefix_suffix",
        "series",
        "tree_exchange",
        "factorization",
        "reciprocal_sum",
        "stats",
        "spiky",
    ] {
        let out = run(&[
            "verify", "--check", check, "--T", "8", "--m", "0.05", "--M", "1",
        ]);
        assert_eq!(out.status.code(), Some(0), "check {check}");
    }
}

#[test]
fn verify_unknown_check_exits_2() {
    let out = run(&["verify", "--check", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_thread_cap_does_not_change_output() {
    let mut one = bin();
    one.env("CHEB_FRACTAL_THREADS", "1").args([
        "verify", "--check", "infix", "--T", "16", "--m", "0.2", "--M", "2.2",
    ]);
    let mut four = bin();
    four.env("CHEB_FRACTAL_THREADS", "4").args([
        "verify", "--check", "infix", "--T", "16", "--m", "0.2", "--M", "2.2",
    ]);
    let a = one.output().unwrap();
    let b = four.output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn verify_writes_report_file_atomically() {
    let dir = tmpdir("verify");
    let path = dir.join("report.csv");
    let out = run(&[
        "verify",
        "--check",
        "prefix_suffix",
        "--T",
        "8",
        "--m",
        "0.05",
        "--M",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("s,t,oracle_norm,bound,ratio,pass\n"));
    assert!(!dir.join("report.csv.tmp").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn experiment_lock_writes_artifacts() {
    let dir = tmpdir("lock");
    let out = run(&[
        "experiment",
        "--name",
        "lock",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    for f in ["trajectories.csv", "bounds.csv", "summary.json"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    let summary = std::fs::read_to_string(dir.join("summary.json")).unwrap();
    assert!(summary.contains("\"pass\": true"));
    assert!(summary.contains("\"seed\": 24301"));
    assert!(summary.contains("\"version\": \"cheb-fractal-v"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn experiment_unknown_name_exits_3() {
    let dir = tmpdir("unknown");
    let out = run(&[
        "experiment",
        "--name",
        "warpdrive",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn experiment_logcosh_reports_expected_failure_as_pass() {
    let dir = tmpdir("logcosh");
    let out = run(&[
        "experiment",
        "--name",
        "logcosh",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let summary = std::fs::read_to_string(dir.join("summary.json")).unwrap();
    assert!(summary.contains("\"envelope_violated_as_expected\": true"));
    let _ = std::fs::remove_dir_all(&dir);
}
