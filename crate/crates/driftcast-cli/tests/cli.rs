//! End-to-end checks of the command-line surface.

use std::path::{Path, PathBuf};
use std::process::Command;

fn driftcast() -> Command {
    Command::new(env!("CARGO_BIN_EXE_driftcast"))
}

fn run_ok(cmd: &mut Command) -> String {
    let output = cmd.output().expect("spawn driftcast");
    assert!(
        output.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).unwrap()
}

fn synth_spec_json() -> &'static str {
    r#"{
        "steps": 1200,
        "vars": 2,
        "cycle_len": 48,
        "tones": [
            [{ "cycles": 4.0, "amplitude": 1.0, "phase": 0.0 }],
            [{ "cycles": 8.0, "amplitude": 0.6, "phase": 0.7 }]
        ],
        "noise_std": 0.05,
        "drift": { "kind": "linear", "total_shift": 1.5 },
        "drift_start_fraction": 0.8,
        "seed": 9
    }"#
}

struct Workspace {
    _dir: tempfile::TempDir,
    data: PathBuf,
    model: PathBuf,
}

fn prepared_workspace() -> Workspace {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, synth_spec_json()).unwrap();
    let data = dir.path().join("data.csv");
    run_ok(driftcast()
        .arg("synth")
        .arg("--spec")
        .arg(&spec)
        .arg("--out")
        .arg(&data));

    let model = dir.path().join("model.json");
    let stdout = run_ok(driftcast().args([
        "pretrain",
        "--data",
        data.to_str().unwrap(),
        "--model",
        "linear",
        "--L",
        "48",
        "--H",
        "24",
        "--split",
        "0.6,0.2,0.2",
        "--ridge",
        "--out",
        model.to_str().unwrap(),
    ]));
    assert!(stdout.contains("train_mse="));
    Workspace {
        _dir: dir,
        data,
        model,
    }
}

fn run_report(ws: &Workspace, report: &Path, extra: &[&str]) -> serde_json::Value {
    let mut cmd = driftcast();
    cmd.args([
        "run",
        "--data",
        ws.data.to_str().unwrap(),
        "--model-file",
        ws.model.to_str().unwrap(),
        "--L",
        "48",
        "--H",
        "24",
        "--report",
        report.to_str().unwrap(),
    ]);
    cmd.args(extra);
    run_ok(&mut cmd);
    serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap()
}

#[test]
fn no_tta_equals_zero_lr() {
    let ws = prepared_workspace();
    let dir = tempfile::tempdir().unwrap();
    let frozen = run_report(&ws, &dir.path().join("frozen.json"), &["--no-tta"]);
    let zero = run_report(&ws, &dir.path().join("zero.json"), &["--tta-lr", "0"]);
    assert!(frozen["adapted"].is_null());
    let baseline_mse = frozen["baseline"]["mse"].as_f64().unwrap();
    let zero_mse = zero["adapted"]["mse"].as_f64().unwrap();
    assert_eq!(baseline_mse, zero_mse);
    assert_eq!(zero["baseline"]["mse"].as_f64().unwrap(), baseline_mse);
}

#[test]
fn fixed_pogt_applies_to_every_batch() {
    let ws = prepared_workspace();
    let dir = tempfile::tempdir().unwrap();
    let report = run_report(
        &ws,
        &dir.path().join("fixed.json"),
        &["--fixed-pogt", "24"],
    );
    let batches = report["batches"].as_array().unwrap();
    assert!(!batches.is_empty());
    for batch in batches {
        assert_eq!(batch["pogt"].as_u64().unwrap(), 24);
    }
    assert_eq!(report["causality_faults"].as_u64().unwrap(), 0);
}

#[test]
fn ridge_pretrain_on_noiseless_data_reports_tiny_mse() {
    // A noiseless tone is exactly predictable from one period of context.
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{
            "steps": 700,
            "vars": 1,
            "cycle_len": 24,
            "tones": [[{ "cycles": 4.0, "amplitude": 1.0, "phase": 0.3 }]],
            "noise_std": 0.0,
            "drift": { "kind": "none" },
            "seed": 4
        }"#,
    )
    .unwrap();
    let data = dir.path().join("tone.csv");
    run_ok(driftcast()
        .arg("synth")
        .arg("--spec")
        .arg(&spec)
        .arg("--out")
        .arg(&data));
    let model = dir.path().join("model.json");
    let stdout = run_ok(driftcast().args([
        "pretrain",
        "--data",
        data.to_str().unwrap(),
        "--model",
        "linear",
        "--L",
        "24",
        "--H",
        "12",
        "--ridge",
        "--out",
        model.to_str().unwrap(),
    ]));
    let train_mse: f64 = stdout
        .split("train_mse=")
        .nth(1)
        .and_then(|rest| rest.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(train_mse < 1e-6, "train mse {train_mse}");
}

#[test]
fn trace_csv_has_expected_columns() {
    let ws = prepared_workspace();
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let mut cmd = driftcast();
    cmd.args([
        "run",
        "--data",
        ws.data.to_str().unwrap(),
        "--model-file",
        ws.model.to_str().unwrap(),
        "--L",
        "48",
        "--H",
        "24",
        "--report",
        dir.path().join("report.json").to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    run_ok(&mut cmd);
    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "origin,horizon_step,variable,prediction,truth,adjusted_flag"
    );
    let first = lines.next().unwrap();
    assert_eq!(first.split(',').count(), 6);
}

#[test]
fn paas_prints_report_fields() {
    let ws = prepared_workspace();
    let stdout = run_ok(driftcast().args([
        "paas",
        "--data",
        ws.data.to_str().unwrap(),
        "--L",
        "48",
        "--H",
        "24",
        "--window-index",
        "3",
    ]));
    assert!(stdout.contains("selected variable: 0"));
    assert!(stdout.contains("dominant frequency bin: 4"));
    assert!(stdout.contains("pogt length: 12"));
}

#[test]
fn mismatched_shape_is_a_one_line_error() {
    let ws = prepared_workspace();
    let output = driftcast()
        .args([
            "run",
            "--data",
            ws.data.to_str().unwrap(),
            "--model-file",
            ws.model.to_str().unwrap(),
            "--L",
            "32",
            "--H",
            "24",
            "--report",
            "unused.json",
        ])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.starts_with("error:"), "stderr: {stderr}");
}

#[test]
fn unknown_flag_fails_with_usage() {
    let output = driftcast().args(["run", "--bogus"]).output().unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("--bogus"), "stderr: {stderr}");
}
