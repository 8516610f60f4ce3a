use std::fs;
use std::path::Path;
use std::process::Command;

fn pathspeed(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pathspeed"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_writes_outputs_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.json", r#"{"n": 200, "dt": 0.01}"#);
    let mut summaries = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("out{k}"));
        let res = pathspeed(&["solve", "--config", &config, "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        for f in ["profile.csv", "trajectory.csv", "summary.json", "timing.json"] {
            assert!(out.join(f).exists(), "{f}");
        }
        summaries.push((
            fs::read(out.join("summary.json")).unwrap(),
            fs::read(out.join("profile.csv")).unwrap(),
            fs::read(out.join("trajectory.csv")).unwrap(),
        ));
    }
    assert_eq!(summaries[0], summaries[1]);

    let out = dir.path().join("out0");
    let profile = fs::read_to_string(out.join("profile.csv")).unwrap();
    let mut lines = profile.lines();
    assert_eq!(lines.next(), Some("s,b,v,a,tau1,tau2,tau3"));
    assert_eq!(lines.count(), 200);
    let summary: serde_json::Value = serde_json::from_slice(&summaries[0].0).unwrap();
    assert_eq!(summary["n"], 200);
    let tf = summary["travel_time"].as_f64().unwrap();
    let duration = summary["trajectory_duration"].as_f64().unwrap();
    assert!((tf - duration).abs() / tf < 5e-3);
}

#[test]
fn n_override_and_resting_profile() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.json", "{}");
    let out = dir.path().join("out");
    let res = pathspeed(&["solve", "--config", &config, "--n", "2", "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["travel_time"].is_null());
    assert_eq!(summary["trajectory_samples"], 0);
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let bad = write_config(dir.path(), "bad.json", r#"{"n": 10, "typo": true}"#);
    assert_eq!(pathspeed(&["solve", "--config", &bad, "--out", out]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(
        pathspeed(&["solve", "--config", missing.to_str().unwrap(), "--out", out]).status.code(),
        Some(2)
    );
    // gravity load larger than the torque limit
    let weak = write_config(
        dir.path(),
        "weak.json",
        r#"{"model": {"constant": {"mass_matrix": [[1]], "external_force": [3]}},
            "waypoints": [[0], [1]],
            "bounds": {"velocity": [1], "acceleration": [1], "torque": [2]}}"#,
    );
    assert_eq!(pathspeed(&["solve", "--config", &weak, "--out", out]).status.code(), Some(3));
    assert!(!pathspeed(&["solve"]).status.success());
}

#[test]
fn bench_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "run.json", r#"{"n": 100, "check": {"trials": 50}}"#);
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    let res = pathspeed(&["bench", "--config", &config, "--out", out_s, "--sizes", "50,100", "--repeats", "3"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("benchmark.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let res = pathspeed(&["check", "--config", &config, "--out", out_s, "--seed", "9"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("check.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    // worked, all-zero, 50 random, model
    assert_eq!(report["instances"], 53);
}
