//! End-to-end tests of the binary: artifact layout, exit codes, determinism,
//! and the corrupted-artifact negative control.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gradflow")
}

fn run_cli(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gradflow-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

const QUADRATIC_CONFIG: &str = r#"{
  "schema_version": 1,
  "carrier": "euclidean",
  "functional": { "kind": "catalog", "name": "quadratic", "diag": [1.0, 2.0] },
  "u0": { "kind": "vector", "coords": [1.0, 1.0] },
  "tau": 0.05,
  "T": 1.0,
  "seed": 11
}"#;

const DRIFT_DIFFUSION_CONFIG: &str = r#"{
  "schema_version": 1,
  "carrier": "wasserstein1d",
  "functional": {
    "kind": "energy",
    "spec": {
      "alpha1": 1.0,
      "alpha2": 1.0,
      "alpha3": 0.0,
      "internal": "entropy",
      "potential": { "quadratic": { "a": 1.0 } },
      "kernel": "zero"
    }
  },
  "u0": { "kind": "gaussian", "mean": 2.0, "var": 0.25 },
  "tau": 0.02,
  "T": 1.0,
  "m": 100,
  "seed": 42,
  "snapshot_times": [1.0],
  "snapshot_cells": 50,
  "snapshot_support": [-6.0, 6.0]
}"#;

#[test]
fn run_writes_expected_artifacts_with_monotone_energy() {
    let dir = temp_dir("run");
    let cfg = write_config(&dir, "cfg.json", DRIFT_DIFFUSION_CONFIG);
    let out = dir.join("out");
    let result = run_cli(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    for file in ["trajectory.csv", "points.csv", "manifest.json", "density_t1.csv"] {
        assert!(out.join(file).exists(), "missing {file}");
    }
    let text = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,t,phi,dist_step,grad_residual");
    let phis: Vec<f64> = lines
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(phis.len(), 51);
    for w in phis.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "energy column must be non-increasing");
    }
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"lambda\": 1.0"));
    assert!(manifest.contains("\"certificates\""));
}

#[test]
fn runs_are_byte_identical_for_identical_config_and_seed() {
    let dir = temp_dir("determinism");
    let cfg = write_config(&dir, "cfg.json", DRIFT_DIFFUSION_CONFIG);
    let out = dir.join("out");
    let args = [
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    assert!(run_cli(&args).status.success());
    let files = ["trajectory.csv", "points.csv", "manifest.json", "density_t1.csv"];
    let first: Vec<Vec<u8>> = files.iter().map(|f| fs::read(out.join(f)).unwrap()).collect();
    fs::remove_dir_all(&out).unwrap();
    assert!(run_cli(&args).status.success());
    for (f, bytes) in files.iter().zip(&first) {
        assert_eq!(&fs::read(out.join(f)).unwrap(), bytes, "{f} not reproducible");
    }
}

#[test]
fn verify_passes_on_good_artifacts_and_fails_on_corrupted_ones() {
    let dir = temp_dir("verify");
    let cfg = write_config(&dir, "cfg.json", QUADRATIC_CONFIG);
    let out = dir.join("out");
    assert!(run_cli(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());

    let good = run_cli(&["verify", "--out", out.to_str().unwrap()]);
    assert_eq!(good.status.code(), Some(0), "{good:?}");
    assert!(out.join("report.json").exists());
    let report_csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(report_csv.starts_with("check,max_violation,tolerance,passed\n"));

    // corrupt one stored point (monotonicity-preserving shift)
    let points_path = out.join("points.csv");
    let text = fs::read_to_string(&points_path).unwrap();
    let mut lines: Vec<String> = text.lines().map(|s| s.to_string()).collect();
    let mid = lines.len() / 2;
    let mut cols: Vec<String> = lines[mid].split(',').map(|s| s.to_string()).collect();
    for c in cols.iter_mut().skip(2) {
        let v: f64 = c.parse().unwrap();
        *c = format!("{}", v + 10.0);
    }
    lines[mid] = cols.join(",");
    fs::write(&points_path, lines.join("\n") + "\n").unwrap();

    let bad = run_cli(&["verify", "--out", out.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1), "{bad:?}");
    let stdout = String::from_utf8_lossy(&bad.stdout);
    assert!(stdout.contains("contraction"));
    assert!(stdout.contains("FAIL"));
    // failed checks report their worst witness
    assert!(stdout.contains("at ("), "witness missing: {stdout}");
}

#[test]
fn verify_reports_are_reproducible_for_a_fixed_seed() {
    let dir = temp_dir("report-determinism");
    let cfg = write_config(&dir, "cfg.json", QUADRATIC_CONFIG);
    let out = dir.join("out");
    assert!(run_cli(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());
    assert!(run_cli(&["verify", "--out", out.to_str().unwrap()]).status.success());
    let first_json = fs::read(out.join("report.json")).unwrap();
    let first_csv = fs::read(out.join("report.csv")).unwrap();
    assert!(run_cli(&["verify", "--out", out.to_str().unwrap()]).status.success());
    assert_eq!(fs::read(out.join("report.json")).unwrap(), first_json);
    assert_eq!(fs::read(out.join("report.csv")).unwrap(), first_csv);
    // a different probe seed is allowed to move the randomized checks
    assert!(run_cli(&[
        "verify",
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "999"
    ])
    .status
    .success());
}

#[test]
fn verify_honors_check_selection() {
    let dir = temp_dir("checks");
    let cfg = write_config(&dir, "cfg.json", QUADRATIC_CONFIG);
    let out = dir.join("out");
    assert!(run_cli(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());
    let result = run_cli(&[
        "verify",
        "--out",
        out.to_str().unwrap(),
        "--checks",
        "evi_prime,contraction",
    ]);
    assert_eq!(result.status.code(), Some(0));
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines.len(), 3, "only the two selected checks: {report}");

    let unknown = run_cli(&[
        "verify",
        "--out",
        out.to_str().unwrap(),
        "--checks",
        "no_such_check",
    ]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = temp_dir("config-errors");
    // infeasible step for the nonconvex catalog entry
    let infeasible = write_config(
        &dir,
        "infeasible.json",
        r#"{
  "schema_version": 1,
  "carrier": "euclidean",
  "functional": { "kind": "catalog", "name": "double_well" },
  "u0": { "kind": "vector", "coords": [2.0] },
  "tau": 2.0,
  "T": 4.0,
  "seed": 1
}"#,
    );
    let out = dir.join("out");
    let result = run_cli(&[
        "run",
        "--config",
        infeasible.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(
        stderr.contains("1 + tau*lambda > 0"),
        "message must cite the feasibility requirement: {stderr}"
    );

    // unknown keys are errors, not warnings
    let unknown = write_config(
        &dir,
        "unknown.json",
        &QUADRATIC_CONFIG.replace("\"seed\": 11", "\"seed\": 11, \"extra\": 1"),
    );
    let result2 = run_cli(&[
        "run",
        "--config",
        unknown.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result2.status.code(), Some(2));

    // missing artifacts
    let missing = run_cli(&["verify", "--out", dir.join("nowhere").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn zero_step_run_writes_single_row_trajectory() {
    let dir = temp_dir("zerostep");
    let cfg = write_config(
        &dir,
        "cfg.json",
        &QUADRATIC_CONFIG.replace("\"T\": 1.0", "\"T\": 0.0"),
    );
    let out = dir.join("out");
    assert!(run_cli(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());
    let text = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(text.lines().count(), 2, "header plus the initial datum");
}

#[test]
fn sweep_emits_rate_table_and_rejects_single_point() {
    let dir = temp_dir("sweep");
    let cfg = write_config(&dir, "cfg.json", QUADRATIC_CONFIG);
    let out = dir.join("out");
    let result = run_cli(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--taus",
        "0.1,0.05,0.025",
    ]);
    assert!(result.status.success(), "{result:?}");
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "tau,sup_error,ratio,fitted_slope");
    assert_eq!(lines.len(), 4);
    let slope: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
    assert!((0.8..=1.2).contains(&slope), "rate {slope}");

    let single = run_cli(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--taus",
        "0.1",
    ]);
    assert_eq!(single.status.code(), Some(2));
}

#[test]
fn list_catalog_names_every_entry() {
    let result = run_cli(&["list-catalog"]);
    assert!(result.status.success());
    let stdout = String::from_utf8_lossy(&result.stdout);
    for name in ["quadratic", "quadratic_flat", "double_well", "smooth_abs", "barenblatt"] {
        assert!(stdout.contains(name), "missing {name}");
    }
}
