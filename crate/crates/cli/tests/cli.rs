use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pmech(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmech"))
        .args(args)
        .output()
        .expect("spawn pmech")
}

fn write_bsc(dir: &Path) -> String {
    let p = dir.join("bsc.json");
    fs::write(&p, r#"{"x_size":2,"y_size":2,"pmf":[[0.45,0.05],[0.05,0.45]]}"#).unwrap();
    p.to_str().unwrap().to_string()
}

fn write_four(dir: &Path) -> String {
    let p = dir.join("four.json");
    fs::write(
        &p,
        r#"{"x_size":4,"y_size":2,"pmf":[[0.2,0.05],[0.05,0.2],[0.15,0.1],[0.1,0.15]]}"#,
    )
    .unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn bounds_reports_u1_and_l1() {
    let dir = tempfile::tempdir().unwrap();
    let j = write_bsc(dir.path());
    let v = stdout_json(&pmech(&["bounds", "--input", &j, "--epsilon", "0.1"]));
    let hyx = v["h_y_given_x"].as_f64().unwrap();
    assert!((v["u1"].as_f64().unwrap() - (hyx + 0.1)).abs() < 1e-12);
    assert!((v["l1"].as_f64().unwrap() - 0.1).abs() < 1e-12);
}

#[test]
fn out_of_range_epsilon_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let j = write_bsc(dir.path());
    let o = pmech(&["bounds", "--input", &j, "--epsilon", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilon"));
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, r#"{"x_size":2,"y_size":2,"pmf":[[0.5,0.5],[0.5,0.5]]}"#).unwrap();
    let o = pmech(&["g0", "--input", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_writes_csv_with_blank_out_of_range_rows() {
    let dir = tempfile::tempdir().unwrap();
    let j = write_bsc(dir.path());
    let csv_path = dir.path().join("sweep.csv");
    let o = pmech(&[
        "sweep",
        "--input",
        &j,
        "--epsilon-grid",
        "0:0.6:0.2",
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "epsilon,U1,L1,L2,L3,L4,L5,g0");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("0.6,,,,,,,"));
    assert!(!lines[1].split(',').nth(1).unwrap().is_empty());
}

#[test]
fn synth_then_audit_passes() {
    let dir = tempfile::tempdir().unwrap();
    let j = write_bsc(dir.path());
    for method in ["frl", "efrl"] {
        let m = dir.path().join(format!("{method}.json"));
        let o = pmech(&[
            "synth", "--input", &j, "--method", method, "--epsilon", "0.1", "-o",
            m.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let v = stdout_json(&pmech(&["audit", "--mechanism", m.to_str().unwrap(), "--input", &j]));
        assert_eq!(v["passed"], Value::Bool(true), "{method}");
    }
}

#[test]
fn separated_defaults_to_a_representation() {
    let dir = tempfile::tempdir().unwrap();
    let j = write_four(dir.path());
    let m = dir.path().join("sep.json");
    let o = pmech(&[
        "synth", "--input", &j, "--method", "separated", "--epsilon", "0.02", "--budget",
        "20000", "-o", m.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&m).unwrap()).unwrap();
    assert!(v.is_object());
}

#[test]
fn audit_against_wrong_joint_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let j = write_bsc(dir.path());
    let m = dir.path().join("frl.json");
    assert!(pmech(&["synth", "--input", &j, "--method", "frl", "-o", m.to_str().unwrap()])
        .status
        .success());
    let other = dir.path().join("other.json");
    fs::write(&other, r#"{"x_size":2,"y_size":2,"pmf":[[0.25,0.25],[0.1,0.4]]}"#).unwrap();
    let o = pmech(&[
        "audit",
        "--mechanism",
        m.to_str().unwrap(),
        "--input",
        other.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seeded_oracle_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let j = write_bsc(dir.path());
    let args = ["oracle", "--input", &j, "--epsilon", "0.1", "--budget", "2000", "--seed", "9"];
    let a = stdout_json(&pmech(&args));
    let b = stdout_json(&pmech(&args));
    assert_eq!(a["value"], b["value"]);
}

#[test]
fn scenario_runs_and_rejects_bad_margin() {
    let v = stdout_json(&pmech(&["scenario", "--id", "C1", "--seed", "1"]));
    assert_eq!(v["id"], "C1");
    let o = pmech(&["scenario", "--id", "2", "--sizes", "4,2,2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn log_base_changes_units() {
    let dir = tempfile::tempdir().unwrap();
    let j = write_bsc(dir.path());
    let bits = stdout_json(&pmech(&["bounds", "--input", &j, "--epsilon", "0", "--no-g0"]));
    let nats = stdout_json(&pmech(&[
        "bounds", "--input", &j, "--epsilon", "0", "--no-g0", "--log-base", "2.718281828459045",
    ]));
    let r = nats["h_y"].as_f64().unwrap() / bits["h_y"].as_f64().unwrap();
    assert!((r - std::f64::consts::LN_2).abs() < 1e-9);
}

#[test]
fn repset_lists_members() {
    let dir = tempfile::tempdir().unwrap();
    let j = write_four(dir.path());
    let v = stdout_json(&pmech(&["repset", "--input", &j]));
    assert!(!v["members"].as_array().unwrap().is_empty());
}
