use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oneway-cqed"))
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env("SOURCE_DATE_EPOCH", "0").output().unwrap()
}

#[test]
fn gate_check_reports_small_residual() {
    let out = run(&["gate-check", "--g", "1.0", "--m", "1", "--k", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["truth_table"]["max_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["truth_table"]["pass"], true);
}

#[test]
fn table1_preset_validates_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let cfg = preset("table1.json");
    let out = run(&["schedule", "validate", "--config", cfg.to_str().unwrap(), "-o", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["clean"], true);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "schedule validate");
    assert_eq!(manifest["timestamp"], 0);
    assert_eq!(manifest["inputs"][0], cfg.to_str().unwrap());
}

#[test]
fn grover_enumerate_marks_00() {
    let out = run(&["grover", "enumerate", "--alpha", "pi", "--beta", "pi"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r4,r3,r2,r1,probability,decoded,valid"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().filter(|r| r[6] == "true").all(|r| r[5] == "00"));
    assert!(rows.iter().any(|r| r[6] == "true"));
}

#[test]
fn grover_presets_match_their_elements() {
    for element in ["00", "01", "10", "11"] {
        let p = preset(&format!("grover-{element}.json"));
        let out = run(&["grover", "enumerate", "--preset", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        let text = String::from_utf8(out.stdout).unwrap();
        for row in text.lines().skip(1).filter(|l| l.ends_with("true")) {
            assert_eq!(row.split(',').nth(5), Some(element));
        }
    }
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    for args in [
        vec!["grover", "sample", "--alpha", "0", "--beta", "pi", "--seed", "7", "--shots", "50"],
        vec!["schedule", "solve", "--n", "4", "--seed", "3"],
        vec!["cluster", "verify", "--source", "collision"],
    ] {
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["schedule", "solve"]).status.code(), Some(1));
    // the explicit state is not a Box(4) eigenstate
    assert_eq!(run(&["cluster", "verify", "--source", "paper"]).status.code(), Some(2));
    // a 1 m/s speed window cannot separate three atoms
    let dir = tempfile::tempdir().unwrap();
    let bounds = dir.path().join("bounds.json");
    std::fs::write(&bounds, r#"{"v_range": [100.0, 101.0]}"#).unwrap();
    let out = run(&["schedule", "solve", "--n", "3", "--starts", "4", "--bounds", bounds.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_config_names_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"n": 2, "orientation": "sideways", "v_mps": [100.0, -3.0], "t_s": [0.0, 1e-4], "L_m": [0.05], "extra": 1}"#,
    )
    .unwrap();
    let out = run(&["schedule", "validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    for key in ["orientation", "v_mps[1]", "extra"] {
        assert!(err.contains(key), "{key} missing from: {err}");
    }
}

#[test]
fn budget_defaults_to_table1() {
    let out = run(&["budget"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["interaction_time"].as_f64().unwrap() - 4.0e-5).abs() < 1e-15);
    assert_eq!(v["detector_order"], serde_json::json!([4, 3, 2, 1]));
}

#[test]
fn dynamics_writes_trajectory_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let report = dir.path().join("thermal-echo.json");
    let p = preset("thermal-echo.json");
    let out = run(&[
        "dynamics",
        "--params",
        p.to_str().unwrap(),
        "--fock-dim",
        "8",
        "--n-th",
        "0.2",
        "--stride",
        "50",
        "-o",
        csv.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("time_s,p_gg,p_ee,re_coh,im_coh,purity,mean_n\n"));
    assert!(text.lines().count() > 3);
    assert!(dir.path().join("traj.csv.manifest.json").exists());
    assert!(dir.path().join("thermal-echo.json.manifest.json").exists());
}
