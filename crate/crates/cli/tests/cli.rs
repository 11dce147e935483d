use std::process::{Command, Output};

use serde_json::Value;

fn lens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lens")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn eigen_on_the_interval() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psi.csv");
    let v = json(&lens(&["eigen", "--b", "3.141592653589793", "--M", "1000", "--out", path.to_str().unwrap()]));
    assert!((v["eigenvalue"].as_f64().unwrap() - 1.0).abs() < 1e-5);
    let csv = std::fs::read_to_string(path).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.is_empty()).count(), 1002);
}

#[test]
fn tune_reaches_unit_eigenvalue() {
    let v = json(&lens(&["tune", "--N", "4", "--a", "1", "--M", "1000"]));
    assert!((v["outer_radius"].as_f64().unwrap() - 5.21021).abs() < 5e-3);
}

#[test]
fn solve_writes_profiles_and_reports_duality() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let v = json(&lens(&["solve", "--p", "3", "--N", "4", "--a", "1", "--b", "5.21021", "--M", "500", "--out", out]));
    assert!(v["level_record"]["duality_defect"].as_f64().unwrap() < 1e-3);
    for name in ["v_p.csv", "u_p.csv", "f_p.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn shoot_then_verify_the_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let v = json(&lens(&["shoot", "--p", "3", "--N", "4", "--a", "1", "--b", "5.21021", "--M", "1000", "--out", out]));
    assert_eq!(v["converged"], Value::Bool(true));
    assert!(dir.path().join("trajectory.csv").exists());

    // the variational profile should also pass the monotone check
    let solved = tempfile::tempdir().unwrap();
    json(&lens(&[
        "solve", "--p", "3", "--N", "4", "--a", "1", "--b", "5.21021", "--M", "500", "--method", "direct", "--out",
        solved.path().to_str().unwrap(),
    ]));
    let u = solved.path().join("u_p.csv");
    let m = json(&lens(&["verify", "--check", "monotone", "--input", u.to_str().unwrap()]));
    assert_eq!(m["monotone"], Value::Bool(true));
}

#[test]
fn verify_pohozaev_and_rearrange() {
    let v = json(&lens(&["verify", "--check", "pohozaev", "--M", "1000"]));
    assert!(v["relative_deviation"].as_f64().unwrap() < 1e-2);
    let r = json(&lens(&["verify", "--check", "rearrange", "--M", "256", "--samples", "30"]));
    assert_eq!(r["passed"], Value::Bool(true));
    assert_eq!(r["samples"].as_u64(), Some(30));
}

#[test]
fn sweep_writes_levels_and_figure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = lens(&[
        "sweep", "--p-list", "0,1,3,6", "--N", "4", "--a", "1", "--b", "5.21021", "--M", "500", "--out", out, "--figure1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["levels.csv", "report.json", "figure1.svg"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let levels = std::fs::read_to_string(dir.path().join("levels.csv")).unwrap();
    assert_eq!(levels.lines().count(), 5);
}

#[test]
fn bad_input_exits_with_code_two() {
    let o = lens(&["shoot", "--p", "1", "--b", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = lens(&["solve", "--p", "2", "--a", "2", "--b", "1"]);
    assert_eq!(o.status.code(), Some(2));
}
