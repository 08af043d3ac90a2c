//! End-to-end tests of the binary: exit-code contract, file outputs,
//! determinism and gauge invariance of stored solutions.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sdot() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sdot"))
}

fn run(args: &[&str]) -> Output {
    sdot().args(args).output().expect("spawn sdot")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn linear_fee_config(dir: &Path, resolution: usize, extra_solver: &str) -> PathBuf {
    write_config(
        dir,
        "config.json",
        &format!(
            r#"{{
  "domain": {{"box": [[0.0, 1.0]], "resolution": [{resolution}]}},
  "sites": [[0.0], [1.0]],
  "cost": {{"type": "power", "exponent": 2.0}},
  "fee": {{"type": "linear", "a": [0.0, 0.3]}},
  "solver": {{"step_rule": {{"type": "polyak"}}{extra_solver}}}
}}"#
        ),
    )
}

#[test]
fn solve_writes_solution_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = linear_fee_config(dir.path(), 2000, "");
    let out = run(&[
        "solve",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{out:?}");
    let solution: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("solution.json")).unwrap())
            .unwrap();
    let lambda = solution["lambda"].as_array().unwrap();
    assert!((lambda[0].as_f64().unwrap() - 0.65).abs() < 2e-3);
    assert!((lambda[1].as_f64().unwrap() - 0.35).abs() < 2e-3);
    assert_eq!(solution["converged"], serde_json::Value::Bool(true));
}

#[test]
fn iteration_cap_yields_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = linear_fee_config(dir.path(), 500, "");
    let out = run(&[
        "solve",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--max-iters",
        "1",
    ]);
    assert_eq!(code(&out), 2);
    let solution: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("solution.json")).unwrap())
            .unwrap();
    assert_eq!(solution["converged"], serde_json::Value::Bool(false));
}

#[test]
fn dimension_mismatch_names_sites_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.json",
        r#"{
  "domain": {"box": [[0.0, 1.0]], "resolution": [16]},
  "sites": [[0.0, 0.0], [0.5, 0.5], [1.0, 1.0]],
  "cost": {"type": "power", "exponent": 2.0},
  "fee": {"type": "zero"}
}"#,
    );
    let out = run(&["solve", config.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("sites"), "stderr: {stderr}");
}

#[test]
fn nonconvex_separable_fee_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "nonconvex.json",
        r#"{
  "domain": {"box": [[0.0, 1.0]], "resolution": [16]},
  "sites": [[0.0], [1.0]],
  "cost": {"type": "power", "exponent": 2.0},
  "fee": {"type": "separable", "breakpoints": [[[0.0, 1.0], [1.0, 0.0]], [[0.0, 0.0], [1.0, 0.1]]]}
}"#,
    );
    let out = run(&["solve", config.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("breakpoints"), "stderr: {stderr}");
}

#[test]
fn check_round_trip_and_gauge_shift() {
    let dir = tempfile::tempdir().unwrap();
    let config = linear_fee_config(dir.path(), 1000, "");
    let out_dir = dir.path().to_str().unwrap();
    assert_eq!(
        code(&run(&["solve", config.to_str().unwrap(), "--out", out_dir])),
        0
    );
    let solution_path = dir.path().join("solution.json");

    let out = run(&[
        "check",
        config.to_str().unwrap(),
        solution_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "round trip must recertify");

    // shifting the potential by a constant changes nothing
    let mut solution: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&solution_path).unwrap()).unwrap();
    for v in solution["psi"].as_array_mut().unwrap() {
        *v = serde_json::json!(v.as_f64().unwrap() + 2.5);
    }
    let shifted = dir.path().join("shifted.json");
    std::fs::write(&shifted, serde_json::to_string(&solution).unwrap()).unwrap();
    let out = run(&["check", config.to_str().unwrap(), shifted.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "gauge shift must recertify");

    // perturbing one coordinate moves the cell boundary and fails (ii)
    let mut solution: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&solution_path).unwrap()).unwrap();
    let psi0 = solution["psi"][0].as_f64().unwrap();
    solution["psi"][0] = serde_json::json!(psi0 + 0.1);
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, serde_json::to_string(&solution).unwrap()).unwrap();
    let out = run(&["check", config.to_str().unwrap(), broken.to_str().unwrap()]);
    assert_eq!(
        code(&out),
        3,
        "perturbed potential must fail the certificate"
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("mass_mismatch"), "stdout: {stdout}");
}

#[test]
fn oracle_enumerate_agrees_with_the_solver() {
    let dir = tempfile::tempdir().unwrap();
    // eight atoms keep the enumeration exact and fast
    let config = linear_fee_config(dir.path(), 8, "");
    let out_dir = dir.path().to_str().unwrap();
    assert_eq!(
        code(&run(&["solve", config.to_str().unwrap(), "--out", out_dir])),
        0
    );
    let out = run(&[
        "oracle",
        config.to_str().unwrap(),
        "--mode",
        "enumerate",
        "--splits",
        "2",
        "--solution",
        dir.path().join("solution.json").to_str().unwrap(),
        "--out",
        out_dir,
    ]);
    assert_eq!(code(&out), 0, "{out:?}");
    assert!(dir.path().join("oracle.json").exists());
}

#[test]
fn oracle_scan_recovers_the_weights() {
    let dir = tempfile::tempdir().unwrap();
    let config = linear_fee_config(dir.path(), 2000, "");
    let out_dir = dir.path().to_str().unwrap();
    let out = run(&[
        "oracle",
        config.to_str().unwrap(),
        "--mode",
        "lambda-scan-1d",
        "--delta",
        "0.001",
        "--out",
        out_dir,
    ]);
    assert_eq!(code(&out), 0);
    let oracle: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("oracle.json")).unwrap())
            .unwrap();
    let lambda = oracle["lambda"].as_array().unwrap();
    assert!((lambda[0].as_f64().unwrap() - 0.65).abs() < 1.5e-3);
}

#[test]
fn scan_rejects_two_dimensional_problems() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "planar.json",
        r#"{
  "domain": {"box": [[0.0, 1.0], [0.0, 1.0]], "resolution": [8, 8]},
  "sites": [[0.2, 0.2], [0.8, 0.8]],
  "cost": {"type": "power", "exponent": 2.0},
  "fee": {"type": "zero"}
}"#,
    );
    let out = run(&[
        "oracle",
        config.to_str().unwrap(),
        "--mode",
        "lambda-scan-1d",
    ]);
    assert_eq!(code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("dimension 1"), "stderr: {stderr}");
}

#[test]
fn stability_constant_and_linear_shift_pass() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "zero.json",
        r#"{
  "domain": {"box": [[0.0, 1.0]], "resolution": [2000]},
  "sites": [[0.0], [1.0]],
  "cost": {"type": "power", "exponent": 2.0},
  "fee": {"type": "zero"},
  "solver": {"step_rule": {"type": "polyak"}}
}"#,
    );
    let out_dir = dir.path().to_str().unwrap();
    let out = run(&[
        "stability",
        config.to_str().unwrap(),
        "--perturb",
        "constant",
        "--steps",
        "5",
        "--out",
        out_dir,
    ]);
    assert_eq!(code(&out), 0, "{out:?}");

    let out = run(&[
        "stability",
        config.to_str().unwrap(),
        "--perturb",
        "linear-shift",
        "--steps",
        "6",
        "--out",
        out_dir,
    ]);
    assert_eq!(code(&out), 0, "{out:?}");
    let csv = std::fs::read_to_string(dir.path().join("stability.csv")).unwrap();
    let distances: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(distances.len(), 6);
    for pair in distances.windows(2) {
        let ratio = pair[1] / pair[0];
        assert!((0.4..=0.6).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn oracle_budget_excess_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = linear_fee_config(dir.path(), 2000, "");
    let out = run(&[
        "oracle",
        config.to_str().unwrap(),
        "--mode",
        "enumerate",
        "--splits",
        "4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("budget"), "stderr: {stderr}");
}

#[test]
fn stability_zero_steps_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = linear_fee_config(dir.path(), 100, "");
    let out = run(&[
        "stability",
        config.to_str().unwrap(),
        "--perturb",
        "constant",
        "--steps",
        "0",
    ]);
    assert_eq!(code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("steps"), "stderr: {stderr}");
}

#[test]
fn solve_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = linear_fee_config(dir.path(), 777, "");
    let first = dir.path().join("a");
    let second = dir.path().join("b");
    std::fs::create_dir_all(&first).unwrap();
    std::fs::create_dir_all(&second).unwrap();
    assert_eq!(
        code(&run(&[
            "solve",
            config.to_str().unwrap(),
            "--out",
            first.to_str().unwrap()
        ])),
        0
    );
    assert_eq!(
        code(&run(&[
            "solve",
            config.to_str().unwrap(),
            "--out",
            second.to_str().unwrap(),
            "--threads",
            "1",
        ])),
        0
    );
    let a = std::fs::read(first.join("solution.json")).unwrap();
    let b = std::fs::read(second.join("solution.json")).unwrap();
    assert_eq!(a, b, "solution bytes must not depend on thread count");
}

#[test]
fn csv_measure_ingestion_warns_and_solves() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = String::from("x1,mass\n");
    for i in 0..50 {
        // raw masses sum to 2, far enough off to warrant the warning
        rows.push_str(&format!("{},{}\n", (i as f64 + 0.5) / 50.0, 2.0 / 50.0));
    }
    std::fs::write(dir.path().join("measure.csv"), rows).unwrap();
    let config = write_config(
        dir.path(),
        "csv.json",
        r#"{
  "domain": {"csv": "measure.csv"},
  "sites": [[0.0], [1.0]],
  "cost": {"type": "power", "exponent": 2.0},
  "fee": {"type": "zero"},
  "solver": {"step_rule": {"type": "polyak"}}
}"#,
    );
    let out = run(&[
        "solve",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("renormalized"), "stderr: {stderr}");
}

#[test]
fn cells_csv_is_written_when_configured() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "cells.json",
        r#"{
  "domain": {"box": [[0.0, 1.0]], "resolution": [64]},
  "sites": [[0.0], [1.0]],
  "cost": {"type": "power", "exponent": 2.0},
  "fee": {"type": "zero"},
  "solver": {"step_rule": {"type": "polyak"}},
  "output": {"cells": "cells.csv"}
}"#,
    );
    let out = run(&[
        "solve",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let cells = std::fs::read_to_string(dir.path().join("cells.csv")).unwrap();
    assert!(cells.starts_with("x1,mass,owner,tied\n"));
    assert_eq!(cells.lines().count(), 65);
}
