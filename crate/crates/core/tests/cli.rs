use std::path::Path;
use std::process::{Command, Output};

fn hitrun(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hitrun")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn schedule_prints_json_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let params = write(dir.path(), "p.json", r#"{"d": 3, "r": 1, "R": 2, "kappa": 100, "variant": "bounded"}"#);
    let out = hitrun(&["schedule", "--config", &params, "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n"], 100);
    assert_eq!(v["n0_impractical"], true);
    assert!(String::from_utf8_lossy(&out.stderr).contains("ceil(eps^-2)"));

    let avg = hitrun(&["schedule", "--config", &params, "--eps", "0.1", "--variant", "average"]);
    let w: serde_json::Value = serde_json::from_slice(&avg.stdout).unwrap();
    assert_eq!(w["variant"], "average");
    assert!((w["n0"].as_f64().unwrap() / 1.538_892_668_475_167_3e37 - 1.0).abs() < 1e-12);

    assert_eq!(hitrun(&["schedule", "--config", &params, "--eps", "0.7"]).status.code(), Some(2));
}

#[test]
fn rstar_table() {
    let out = hitrun(&["rstar", "--d-max", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 2);
    let out = hitrun(&["rstar", "--d-max", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("d,r_star\n1,"));
    let row2: f64 = text.lines().nth(2).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((row2 - (8.0f64 / 7.0).ln()).abs() < 1e-9);
    assert_eq!(hitrun(&["rstar", "--d-max", "0"]).status.code(), Some(2));
}

#[test]
fn gaussian_params_json() {
    let dir = tempfile::tempdir().unwrap();
    let sigma = write(dir.path(), "s.json", r#"{"sigma": [[1, 0], [0, 1]]}"#);
    let out = hitrun(&["gaussian-params", "--config", &sigma]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["r"].as_f64().unwrap() - 0.36542).abs() < 1e-5);
    assert!((v["R"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-5);
    assert!((v["kappa"].as_f64().unwrap() - 3.29744).abs() < 1e-5);
    let bad = write(dir.path(), "b.json", "[[1, 2], [2, 1]]");
    assert_eq!(hitrun(&["gaussian-params", "--config", &bad]).status.code(), Some(2));
}

#[test]
fn estimate_outputs_and_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "e.json",
        r#"{
  "density": {"type": "uniform", "body": {"type": "box", "lo": [-1, -1], "hi": [1, 1]}},
  "g": {"type": "box", "lo": [-1, -1], "hi": [1, 1]},
  "integrand": {"name": "coordinate", "index": 2},
  "mode": "single",
  "n": 500,
  "n0": 10,
  "reps": 3,
  "seed": 5
}"#,
    );
    let csv = dir.path().join("e.csv");
    let out = hitrun(&["estimate", "--config", &cfg, "--out", csv.to_str().unwrap(), "--seed", "6"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("rep,value,n,n0,seed\n"));
    assert_eq!(text.lines().count(), 4);
    assert!(dir.path().join("e.csv.timing.csv").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("e.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 6);

    let broken = write(dir.path(), "x.json", "{\"density\": {\"type\": \"uniform\",\n \"bdy\": 1}}");
    let out = hitrun(&["estimate", "--config", &broken]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bdy") && err.contains("line 2"), "{err}");
}

#[test]
fn validate_passes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("v.csv");
    let out = hitrun(&["--parallel", "2", "validate", "--seed", "3", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let reports: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("v.json")).unwrap()).unwrap();
    assert!(reports.len() >= 15);
    assert!(reports.iter().all(|r| r["pass"] == true));
}
