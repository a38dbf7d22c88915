//! End-to-end tests of the binary: reported values, exit-code contract,
//! deterministic output.

use std::process::{Command, Output};

fn starlocal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_starlocal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_stdout(args: &[&str]) -> serde_json::Value {
    let out = starlocal(args);
    assert!(out.status.success(), "{args:?}: {:?}", out);
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn report_m3_n2_values() {
    let v = json_stdout(&["report", "--m", "3", "--n", "2"]);
    assert_eq!(v["schema_version"], "v1");
    assert_eq!(v["command"], "report");
    assert_eq!(v["config"]["m"], 3);
    assert_eq!(v["config"]["n"], 2);
    let delta = v["scenario"]["delta"].as_f64().unwrap();
    assert!((delta - 6.92820323).abs() < 1e-6);
    assert_eq!(v["scenario"]["classical_bound"], 4.0);
    let opt = v["scenario"]["quantum_opt"].as_f64().unwrap();
    assert!((opt - 6.92820323).abs() < 1e-6);
    assert_eq!(v["tolerances"]["operator_identity"], 1e-10);
    // verification residuals ride along in every report
    assert!(v["verification"]["sos_residuals"].as_array().unwrap().len() == 3);
}

#[test]
fn report_other_scenarios() {
    let v = json_stdout(&["report", "--m", "4", "--n", "1"]);
    assert!((v["scenario"]["delta"].as_f64().unwrap() - 16.0).abs() < 1e-9);
    assert_eq!(v["scenario"]["classical_bound"], 8.0);

    let v = json_stdout(&["report", "--m", "2", "--n", "3"]);
    assert!((v["scenario"]["delta"].as_f64().unwrap() - 2.82842712).abs() < 1e-6);
    assert_eq!(v["scenario"]["classical_bound"], 2.0);
}

#[test]
fn classical_bound_census() {
    let v = json_stdout(&["classical-bound", "--m", "3"]);
    assert_eq!(v["eta_max"], 4);
    assert_eq!(v["strategy_count"], 6);
    assert_eq!(v["witness"], "+++-");

    let v = json_stdout(&["classical-bound", "--m", "2"]);
    assert_eq!(v["eta_max"], 2);

    let v = json_stdout(&["classical-bound", "--m", "5"]);
    assert_eq!(v["eta_max"], 16);
    assert_eq!(v["strategy_count"], 10);
}

#[test]
fn verify_passes_on_the_canonical_realization() {
    let out = starlocal(&["verify", "--m", "3", "--n", "2", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["probe_min"].as_f64().unwrap() >= -1e-9);
}

#[test]
fn output_is_byte_identical_across_runs() {
    for args in [
        vec!["report", "--m", "3", "--n", "2", "--seed", "5"],
        vec!["sweep", "--m", "3", "--format", "csv"],
        vec!["verify", "--m", "2", "--n", "1", "--trials", "25", "--seed", "11"],
    ] {
        let a = starlocal(&args);
        let b = starlocal(&args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.status.code(), b.status.code());
    }
}

#[test]
fn sweep_grid_and_crossing() {
    let out = starlocal(&["sweep", "--m", "4", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "v,delta,bound,violates");
    assert_eq!(lines.len(), 102);
    assert_eq!(lines[101], "1.00,16.000000000,8.000000000,1");
    // analytic crossing 1/2; the first strictly violating grid point follows it
    let first_violation = lines
        .iter()
        .skip(1)
        .find(|l| l.ends_with(",1"))
        .unwrap()
        .split(',')
        .next()
        .unwrap();
    assert_eq!(first_violation, "0.51");

    let v = json_stdout(&["sweep", "--m", "3"]);
    let analytic = v["v_star_analytic"].as_f64().unwrap();
    assert!((analytic - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    assert_eq!(v["v_star_grid"], 0.58);
    // the v = 1 row equals the report value
    let rows = v["rows"].as_array().unwrap();
    let last = rows.last().unwrap();
    let report = json_stdout(&["report", "--m", "3", "--n", "1"]);
    assert!(
        (last["delta"].as_f64().unwrap() - report["scenario"]["delta"].as_f64().unwrap()).abs()
            < 1e-12
    );
}

#[test]
fn encoding_canonical_object() {
    let out = starlocal(&["encoding", "--m", "4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    // canonical field order
    let m = text.find("\"m\"").unwrap();
    let strings = text.find("\"strings\"").unwrap();
    let signs = text.find("\"signs\"").unwrap();
    let constraints = text.find("\"constraints\"").unwrap();
    let gram = text.find("\"gram\"").unwrap();
    assert!(m < strings && strings < signs && signs < constraints && constraints < gram);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["strings"].as_array().unwrap().len(), 8);
    assert_eq!(v["constraints"][0], "1110");
}

#[test]
fn exit_code_contract() {
    // bad flag values and unknown flags: 4
    let out = starlocal(&["report", "--m", "1"]);
    assert_eq!(out.status.code(), Some(4));
    let out = starlocal(&["report", "--bogus"]);
    assert_eq!(out.status.code(), Some(4));
    let out = starlocal(&["report", "--m", "3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(4));

    // resource caps: 3 (env var overrides the dimension cap)
    let out = Command::new(env!("CARGO_BIN_EXE_starlocal"))
        .args(["report", "--m", "4"])
        .env("STARLOCAL_DIM_CAP", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = starlocal(&["encoding", "--m", "13"]);
    assert_eq!(out.status.code(), Some(3));

    // help and version stay 0
    let out = starlocal(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn out_flag_writes_the_file() {
    let dir = std::env::temp_dir().join(format!("starlocal-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("table.json");
    let out = starlocal(&["encoding", "--m", "3", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let data = std::fs::read_to_string(&path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&data).unwrap();
    assert_eq!(v["m"], 3);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn text_report_prints_the_sign_grid() {
    let out = starlocal(&["report", "--m", "3", "--n", "2", "--format", "text"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("+ + + -"));
    assert!(text.contains("+ + - +"));
    assert!(text.contains("+ - + +"));
    assert!(text.contains("s=111 + - - -"));
    assert!(text.contains("delta = 6.92820323"));
}
