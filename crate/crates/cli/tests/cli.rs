use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kyleback(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kyleback"))
        .args(args)
        .current_dir(dir)
        .env_remove("KYLEBACK_THREADS")
        .output()
        .expect("binary runs")
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn preset_with(name: &str, edit: impl FnOnce(&mut Value)) -> String {
    let mut v: Value = serde_json::from_str(kyleback_core::presets::preset_text(name).unwrap()).unwrap();
    edit(&mut v);
    v.to_string()
}

#[test]
fn solve_static_writes_unit_payoff() {
    let dir = tempfile::tempdir().unwrap();
    let out = kyleback(&["solve", "--scenario", "static_kyle", "--out", "run1"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let run = dir.path().join("run1");
    assert!(run.join("riccati.csv").exists());
    assert!(run.join("foc.csv").exists());
    let eq = json(run.join("equilibrium.json"));
    assert!((eq["J"].as_f64().unwrap() - 1.0).abs() <= 1e-3);
    assert_eq!(eq["lambda"].as_f64().unwrap(), 1.0);
    let header = std::fs::read_to_string(run.join("riccati.csv")).unwrap();
    assert!(header.starts_with("t,S,k,l,phi1_t0,phi2_t0,phi3_Tt\n"));
}

#[test]
fn solve_from_file_without_closed_form_writes_objective() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("fb.json"), kyleback_core::presets::preset_text("g_feedback").unwrap()).unwrap();
    let out = kyleback(&["solve", "--scenario", "fb.json", "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let o = dir.path().join("o");
    assert!(!o.join("equilibrium.json").exists());
    let obj = json(o.join("objective.json"));
    assert_eq!(obj["foc_form"], "general");
    assert!(obj["foc_sup_psi"].as_f64().is_some());
    let foc = std::fs::read_to_string(o.join("foc.csv")).unwrap();
    assert!(foc.starts_with("t,foc_residual,foc_residual_psi\n"));
}

#[test]
fn closed_form_with_feedback_is_not_applicable() {
    let dir = tempfile::tempdir().unwrap();
    let text = preset_with("g_feedback", |v| v["strategy"] = serde_json::json!({"kind": "closed_form_g0"}));
    std::fs::write(dir.path().join("bad.json"), text).unwrap();
    let out = kyleback(&["solve", "--scenario", "bad.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("NotApplicable: g must vanish"), "{}", stderr(&out));
}

#[test]
fn degenerate_scenario_reports_zero_payoff() {
    let dir = tempfile::tempdir().unwrap();
    let text = preset_with("g0_general", |v| {
        v["s0"] = 0.0.into();
        v["sigma_v"] = serde_json::json!({"kind": "constant", "value": 0.0});
    });
    std::fs::write(dir.path().join("flat.json"), text).unwrap();
    let out = kyleback(&["solve", "--scenario", "flat.json", "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(json(dir.path().join("o/equilibrium.json"))["J"].as_f64(), Some(0.0));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = kyleback(&["simulate", "--scenario", "static_kyle", "--paths", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("n_paths must be ≥ 1"));

    let out = kyleback(&["solve", "--scenario", "no_such_thing"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(dir.path().join("broken.json"), "{\"T\": 1.0").unwrap();
    let out = kyleback(&["solve", "--scenario", "broken.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let text = preset_with("static_kyle", |v| v["sigma_z"] = serde_json::json!({"kind": "constant", "value": 0.0}));
    std::fs::write(dir.path().join("mute.json"), text).unwrap();
    let out = kyleback(&["solve", "--scenario", "mute.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sigma_z"));

    let out = kyleback(&["solve", "--scenario", "static_kyle", "--delta", "0.7"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(env!("CARGO_BIN_EXE_kyleback"))
        .args(["solve", "--scenario", "static_kyle"])
        .current_dir(dir.path())
        .env("KYLEBACK_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec!["simulate", "--scenario", "g_feedback", "--paths", "500", "--seed", "3", "--dump-paths", "2", "--out", out]
    };
    for out in ["a", "b"] {
        let o = kyleback(&args(out), dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let report = json(dir.path().join("a/report.json"));
    let outputs = report["outputs"].as_array().unwrap();
    assert!(outputs.iter().any(|o| o == "paths/path_00001.csv"));
    for name in outputs {
        let name = name.as_str().unwrap();
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn verify_riccati_passes_and_catches_a_corrupted_drift() {
    let dir = tempfile::tempdir().unwrap();
    let out = kyleback(&["verify", "--suite", "riccati", "--out", "ok"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let report = json(dir.path().join("ok/report.json"));
    let checks = report["checks"].as_array().unwrap();
    let mut names: Vec<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"riccati.g_feedback.identity"));
    let before = names.len();
    names.sort();
    names.dedup();
    assert_eq!(names.len(), before);

    let out = kyleback(&["verify", "--suite", "all", "--paths", "200", "--corrupt-riccati", "--out", "bad"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("FAIL riccati.static_kyle.closed_form"), "{}", stderr(&out));
    let report = json(dir.path().join("bad/report.json"));
    assert!(report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["name"] == "riccati.g0_general.positivity" && c["status"] == "fail"));
}

#[test]
fn verify_measure_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = kyleback(&["verify", "--suite", "measure", "--paths", "20000", "--out", "m"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let report = json(dir.path().join("m/report.json"));
    assert_eq!(report["checks"].as_array().unwrap().len(), 9);
}
