use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pbc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pbc"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_lists_every_builtin_map() {
    let dir = tempfile::tempdir().unwrap();
    let out = pbc(dir.path(), &["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["ricker", "quail", "exglob", "exnotglob", "switching"] {
        assert!(text.contains(name), "{name} missing from help");
    }
}

#[test]
fn inadmissible_control_exits_two_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = pbc(
        dir.path(),
        &[
            "simulate",
            "--map",
            "ricker r=3.5",
            "--alpha",
            "0.1",
            "--ell",
            "0.2",
            "--seed",
            "1",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let diag: Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(diag["status"], "infeasible");
    let meta = json(&dir.path().join("trajectory.csv.meta.json"));
    assert_eq!(meta["status"], "error");
}

#[test]
fn unknown_map_is_an_ordinary_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = pbc(dir.path(), &["analyze", "--map", "tent"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sidecar_reproduces_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate", "--map", "ricker", "--param", "r=3.5", "--noise", "uniform", "--alpha", "0.3",
        "--ell", "0.2", "--steps", "300", "--out", "a.csv",
    ];
    let first = pbc(dir.path(), &args);
    assert!(
        first.status.success(),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let stderr = String::from_utf8(first.stderr).unwrap();
    assert!(stderr.contains("seed = "), "entropy seed must be printed");
    let meta = json(&dir.path().join("a.csv.meta.json"));
    assert!(meta["config"]["seed"].is_u64());
    assert_eq!(meta["config"]["noise"]["kind"], "uniform");

    let again = pbc(
        dir.path(),
        &["simulate", "--config", "a.csv.meta.json", "--out", "b.csv"],
    );
    assert!(again.status.success());
    assert!(!String::from_utf8(again.stderr).unwrap().contains("seed = "));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 302);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"map": "ricker r=3.5", "alpha": 0.1, "ell": 0.2, "steps": 100, "seed": 4}"#,
    )
    .unwrap();
    assert_eq!(
        pbc(dir.path(), &["simulate", "--config", "cfg.json"])
            .status
            .code(),
        Some(2)
    );
    let out = pbc(
        dir.path(),
        &["simulate", "--config", "cfg.json", "--alpha", "0.37"],
    );
    assert!(out.status.success());
    let meta = json(&dir.path().join("trajectory.csv.meta.json"));
    assert_eq!(meta["config"]["alpha"], 0.37);
    assert_eq!(meta["config"]["steps"], 100);
}

#[test]
fn analyze_reports_refined_gain() {
    let dir = tempfile::tempdir().unwrap();
    let out = pbc(dir.path(), &["analyze", "--map", "exnotglob"]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let alpha_bar = report["refinement"]["alpha_bar"].as_f64().unwrap();
    assert!((alpha_bar - 0.46296).abs() < 1e-4);
    assert_eq!(report["certificate"]["gain"]["certified"], false);
    assert_eq!(json(&dir.path().join("analyze.json")), report);
}

#[test]
fn bifurcate_and_region_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let common = [
        "--map",
        "ricker r=3.0",
        "--ell",
        "0.2",
        "--seed",
        "5",
        "--alpha-min",
        "0.2",
        "--alpha-max",
        "0.4",
    ];
    let mut args = vec![
        "bifurcate",
        "--alpha-steps",
        "5",
        "--samples",
        "10",
        "--transient",
        "2000",
    ];
    args.extend(common);
    let out = pbc(dir.path(), &args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("bifurcation.csv")).unwrap();
    assert!(csv.starts_with("alpha,sample\n"));
    assert_eq!(csv.lines().count(), 1 + 5 * 10);
    assert!(dir.path().join("bifurcation.rates.csv").exists());
    let meta = json(&dir.path().join("bifurcation.csv.meta.json"));
    assert_eq!(meta["summary"]["collapse_threshold"], 0.3);

    let out = pbc(
        dir.path(),
        &[
            "region",
            "--map",
            "ricker r=3.5",
            "--seed",
            "5",
            "--alpha-min",
            "0.3",
            "--alpha-max",
            "0.5",
            "--alpha-steps",
            "5",
            "--ell-max",
            "0.2",
            "--ell-steps",
            "3",
            "--paths",
            "4",
            "--steps",
            "3000",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("region.csv")).unwrap();
    assert!(csv.starts_with("alpha,ell,analytic,rate\n"));
    assert_eq!(csv.lines().count(), 16);
    let meta = json(&dir.path().join("region.csv.meta.json"));
    assert_eq!(
        meta["summary"]["disagreements"].as_array().unwrap().len(),
        0
    );
}

#[test]
fn envelope_curve_for_a_smooth_map() {
    let dir = tempfile::tempdir().unwrap();
    let out = pbc(
        dir.path(),
        &["envelope", "--map", "ricker r=3.5", "--out", "env.csv"],
    );
    assert!(out.status.success());
    let meta = json(&dir.path().join("env.csv.meta.json"));
    assert!(meta["summary"]["max"].as_f64().unwrap() < 3.0 / 7.0);
    let out = pbc(dir.path(), &["envelope", "--map", "switching"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_filters_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = pbc(dir.path(), &["verify", "--filter", "constants"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("gain-constants") && !text.contains("bifurcation-thresholds"));
    let results = json(&dir.path().join("verify.json"));
    assert_eq!(results.as_array().unwrap().len(), 4);
    assert_eq!(
        pbc(dir.path(), &["verify", "--filter", "no-such-check"])
            .status
            .code(),
        Some(1)
    );
}
