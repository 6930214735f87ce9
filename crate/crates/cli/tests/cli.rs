use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use spde_lab_cli::commands::verdicts;
use spde_lab_cli::RunConfig;

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn golden(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn spde_lab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spde-lab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SPDE_LAB_WORKERS")
        .output()
        .unwrap()
}

fn ok_json(args: &[&str], out: &Path) -> Value {
    let output = spde_lab(args, out);
    assert!(output.status.success(), "{args:?}: {}", String::from_utf8_lossy(&output.stderr));
    let printed: Value = serde_json::from_slice(&output.stdout).unwrap();
    let written: Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(printed, written);
    printed
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn eig_reports_both_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let v = ok_json(&["eig"], dir.path());
    let analytic = v["lambda1_analytic"].as_f64().unwrap();
    let discrete = v["lambda1_discrete"].as_f64().unwrap();
    assert!((analytic - PI * PI).abs() < 1e-12);
    assert!((discrete - analytic).abs() <= 0.01);
    assert_eq!(v["difference"].as_f64().unwrap(), discrete - analytic);
    assert!(v["normalization_residual"].as_f64().unwrap() < 1e-12);

    let v = ok_json(&["eig", "--set", "domain.length=2"], dir.path());
    assert!((v["lambda1_analytic"].as_f64().unwrap() - PI * PI / 4.0).abs() < 1e-12);

    // 3×3 stencil: 32(1 − cos(π/4))
    let v = ok_json(&["eig", "--set", "domain.n=3"], dir.path());
    let oracle = 32.0 * (1.0 - (PI / 4.0).cos());
    assert!((v["lambda1_discrete"].as_f64().unwrap() - oracle).abs() < 1e-9);
    assert!((v["lambda1_discrete"].as_f64().unwrap() - 9.3726).abs() < 1e-4);
}

#[test]
fn check_reports_have_a_fixed_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo_file("configs/positivity.toml");
    let v = ok_json(&["check", "--config", cfg.to_str().unwrap()], dir.path());
    let reports = v.as_array().unwrap();
    assert!(!reports.is_empty());
    for r in reports {
        let obj = r.as_object().unwrap();
        let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        assert_eq!(keys, ["inputs", "margin", "name", "notes", "satisfied"]);
        assert_eq!(obj["satisfied"].as_bool().unwrap(), obj["margin"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn check_matches_golden_fujita_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    for (config, file, expected) in [
        ("configs/fujita_supercritical.toml", "check_fujita_c13.json", true),
        ("configs/fujita_subcritical.toml", "check_fujita_c12.json", false),
    ] {
        let cfg = repo_file(config);
        let v = ok_json(&["check", "--config", cfg.to_str().unwrap()], dir.path());
        assert_eq!(v, golden(file), "{config}");
        assert_eq!(verdicts(&v)["fujita"], expected);
        // (c·sin, φ) = cπ/4 against λ₁ = π²
        let xi0 = v[0]["inputs"]["xi0"].as_f64().unwrap();
        let c = if expected { 13.0 } else { 12.0 };
        assert!((xi0 - c * PI / 4.0).abs() < 1e-12);
    }
}

#[test]
fn check_matches_golden_positivity_example() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo_file("configs/positivity.toml");
    let v = ok_json(&["check", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(v, golden("check_positivity.json"));
    assert!(verdicts(&v)["positivity_22"]);
    let rejected = ok_json(&["check", "--config", cfg.to_str().unwrap(), "--set", "noise.m=1.6"], dir.path());
    assert!(!verdicts(&rejected)["positivity_22"]);
}

#[test]
fn bound_reports_the_closed_form_or_null() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo_file("configs/deterministic_blowup.toml");
    let v = ok_json(&["bound", "--config", cfg.to_str().unwrap()], dir.path());
    let oracle = (5.0 * PI / (5.0 * PI - PI * PI)).ln() / (PI * PI);
    assert!((v["t_star"].as_f64().unwrap() - oracle).abs() < 1e-12);
    assert_eq!(v["method"], "closed_form");

    let v = ok_json(&["bound", "--config", cfg.to_str().unwrap(), "--set", "initial.amplitude=1"], dir.path());
    assert!(v["t_star"].is_null());
    assert!(v["note"].as_str().unwrap().contains("not positive"));

    let v = ok_json(&["bound"], dir.path());
    assert!(v["t_star"].is_null());
}

#[test]
fn simulate_zero_problem_gives_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let v = ok_json(&["simulate", "--set", "initial.amplitude=0", "--set", "time.t_max=0.01"], dir.path());
    assert!(v["blow_up_time"].is_null());
    assert_eq!(v["exploded"], false);
    let (header, rows) = read_csv(&dir.path().join("series.csv"));
    assert_eq!(header.join(","), "t,phi_pairing,phi_pairing_sq,l2sq,l4_4,sup,neg_l2sq,neg_l1");
    assert_eq!(rows.len(), 101);
    assert!(rows.iter().all(|r| r[1..].iter().all(|&x| x == 0.0)));
}

#[test]
fn simulate_deterministic_blowup_within_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo_file("configs/deterministic_blowup.toml");
    let v = ok_json(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(v["exploded"], true);
    assert!(v["blow_up_time"].as_f64().unwrap() <= 0.1104);
}

#[test]
fn csv_uses_seventeen_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    ok_json(&["simulate", "--set", "time.t_max=0.001"], dir.path());
    let text = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
    let row = text.lines().nth(1).unwrap();
    for field in row.split(',') {
        let mantissa = field.split('e').next().unwrap();
        assert_eq!(mantissa.trim_start_matches('-').len(), 18, "{field}");
    }
}

#[test]
fn config_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo_file("configs/positivity.toml");
    let sets = ["time.t_max=0.001", "time.scheme=semi_implicit", "kernel.ell=0.123456789"];
    let mut args = vec!["simulate", "--config", cfg.to_str().unwrap()];
    for s in &sets {
        args.extend(["--set", s]);
    }
    let v = ok_json(&args, dir.path());
    let echoed: RunConfig = serde_json::from_value(v["config_echo"].clone()).unwrap();
    let owned: Vec<String> = sets.iter().map(|s| (*s).to_owned()).collect();
    assert_eq!(echoed, RunConfig::load(Some(&cfg), &owned).unwrap());
}

#[test]
fn mc_with_one_path_equals_simulate() {
    let dir_sim = tempfile::tempdir().unwrap();
    let dir_mc = tempfile::tempdir().unwrap();
    let cfg = repo_file("configs/positivity.toml");
    let args = ["--config", cfg.to_str().unwrap(), "--set", "mc.paths=1", "--set", "time.t_max=0.01"];
    ok_json(&[&["simulate"], &args[..]].concat(), dir_sim.path());
    let v = ok_json(&[&["mc"], &args[..]].concat(), dir_mc.path());
    assert_eq!(v["n_paths"], 1);
    let (_, sim) = read_csv(&dir_sim.path().join("series.csv"));
    let (header, mc) = read_csv(&dir_mc.path().join("series.csv"));
    assert_eq!(header.len(), 1 + 3 * 7 + 1);
    assert_eq!(header[1], "phi_pairing_mean");
    assert_eq!(header.last().unwrap(), "n_alive");
    assert_eq!(sim.len(), mc.len());
    for (s, m) in sim.iter().zip(&mc) {
        assert_eq!(s[0], m[0]);
        for j in 0..7 {
            assert_eq!(s[1 + j], m[1 + 3 * j], "column {j}");
            assert_eq!(m[2 + 3 * j], 0.0);
        }
        assert_eq!(m[22], 1.0);
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let run = |workers: &str, via_env: bool| {
        let dir = tempfile::tempdir().unwrap();
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_spde-lab"));
        cmd.args(["mc", "--set", "noise.family=power", "--set", "noise.b=1", "--set", "mc.paths=40"])
            .args(["--set", "time.t_max=0.005", "--set", "domain.n=50", "--out"])
            .arg(dir.path());
        if via_env {
            cmd.env("SPDE_LAB_WORKERS", workers);
        } else {
            cmd.env_remove("SPDE_LAB_WORKERS").args(["--workers", workers]);
        }
        assert!(cmd.output().unwrap().status.success());
        std::fs::read_to_string(dir.path().join("series.csv")).unwrap()
    };
    let one = run("1", true);
    assert_eq!(one, run("4", false));
    assert_eq!(one, run("3", true));
}

#[test]
fn compare_reports_domination() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo_file("configs/deterministic_blowup.toml");
    let v = ok_json(
        &["compare", "--config", cfg.to_str().unwrap(), "--set", "mc.paths=2", "--set", "time.t_max=0.05"],
        dir.path(),
    );
    assert_eq!(v["domination"]["observable"], "phi_pairing");
    assert_eq!(v["passed"], true);
    assert!(v["domination"]["points"].as_array().unwrap().len() > 10);
    assert!(dir.path().join("series.csv").exists());

    let out = spde_lab(&["compare", "--set", "drift.family=allen_cahn"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = spde_lab(&["simulate", "--set", "drift.beat=2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("drift.beat"));

    let out = spde_lab(&["mc", "--set", "time.dt=-1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("time.dt"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[time]\ndt = 1e-4\nt_max = \n").unwrap();
    let out = spde_lab(&["eig", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = spde_lab(&["eig", "--config", "/nonexistent/run.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let file = dir.path().join("not_a_dir");
    std::fs::write(&file, "").unwrap();
    let out = spde_lab(&["eig"], &file);
    assert_eq!(out.status.code(), Some(1));

    let out = spde_lab(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_exits_zero_when_nothing_is_satisfied() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo_file("configs/fujita_subcritical.toml");
    let out = spde_lab(&["check", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn numeric_failures_exit_with_three() {
    let err = spde_lab_cli::CliError::Numeric(spde_lab::Error::NoConvergence { iterations: 1 });
    assert_eq!(err.exit_code(), 3);
}
