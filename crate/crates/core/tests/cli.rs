use std::process::{Command, Output};

use qtm::output::{Document, SteadyStateOutput, CSV_HEADER};

fn qtm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtm")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

const FRIDGE: [&str; 10] = ["--T", "10,5,4", "--E1", "1", "--E3", "1", "--g", "0.01", "--p", "1e-3"];

fn with(base: &[&str], extra: &[&'static str]) -> Vec<String> {
    base.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn run(args: Vec<String>) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    qtm(&refs)
}

#[test]
fn carnot_check_reports_cop_two() {
    let out = qtm(&["fridge", "carnot-check", "--T", "10,5,4", "--E3", "1", "--g", "1e-3", "--p", "1e-3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["schema"], "qtm/1");
    let check = &doc["result"]["check"];
    assert_eq!(check["limit_performance"].as_f64().unwrap(), 2.0);
    assert_eq!(check["carnot_performance"].as_f64().unwrap(), 2.0);
    assert!(check["difference"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(check["passed"], true);
}

#[test]
fn unknown_flag_exits_one_with_usage() {
    let out = qtm(&["fridge", "steady", "--frobnicate", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn help_exits_zero() {
    let out = qtm(&["fridge", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    for sub in ["steady", "currents", "sweep", "carnot-check", "evolve", "oracle-check"] {
        assert!(stdout(&out).contains(sub), "{sub} missing from help");
    }
}

#[test]
fn ordering_violation_names_the_constraint() {
    let out = qtm(&["fridge", "steady", "--T", "5,10,4", "--E1", "1", "--E3", "1", "--g", "0.01", "--p", "1e-3"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error[domain]: requires T1 > T2 > T3"), "{err}");
}

#[test]
fn inconsistent_e2_is_rejected() {
    let out = run(with(&FRIDGE, &["--E2", "3"]).into_iter().chain(["fridge".into(), "steady".into()]).collect());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("E2 = 3 contradicts E1 + E3 = 2"), "{}", stderr(&out));
}

#[test]
fn numerical_failure_exits_two() {
    let out = qtm(&[
        "engine", "run", "--T", "10,5", "--E2", "1", "--E3", "0.5", "--g", "0.2", "--p", "0.2", "--N", "3", "--n0", "1",
        "--horizon", "100",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).starts_with("error[truncation-contaminated]"));
}

#[test]
fn csv_header_is_exact_and_empty_grid_warns() {
    let out = run(with(&FRIDGE, &["fridge", "sweep", "--axis", "T3", "--grid", "", "--format", "csv"]));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out), format!("{}\n", CSV_HEADER.join(",")));
    assert!(stderr(&out).contains("empty sweep grid"));
}

#[test]
fn sweep_keeps_error_rows_in_order() {
    let out = run(with(&FRIDGE, &["fridge", "sweep", "--axis", "T3", "--grid", "3,5,2", "--format", "csv"]));
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let params: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(params, ["3", "5", "2"]);
    assert!(text.lines().nth(2).unwrap().contains("error: requires T1 > T2 > T3"));
}

#[test]
fn json_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("steady.json");
    let out = run(with(&FRIDGE, &["fridge", "steady"]).into_iter().chain(["--output".into(), path.display().to_string()]).collect());
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let doc: Document<SteadyStateOutput> = serde_json::from_str(&text).unwrap();
    assert_eq!(doc.kind, "steady_state");
    assert_eq!(doc.result.state.len(), 8);
    assert_eq!(serde_json::to_string_pretty(&doc).unwrap() + "\n", text);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(
        &path,
        "machine = \"fridge\"\ncommand = \"currents\"\nE1 = 1.0\nE3 = 1.0\nT = [10.0, 5.0, 4.0]\ng = 0.01\np = [1e-3]\n",
    )
    .unwrap();
    let config = path.display().to_string();
    let out = qtm(&["fridge", "currents", "--config", &config, "--E1", "0.8", "--print-config", "-v"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let resolved: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(resolved["spec"]["qubit1"]["energy"], 0.8);
    assert_eq!(resolved["spec"]["qubit2"]["energy"], 1.8);
    assert!(stderr(&out).contains("default applied: seed = 42"));

    std::fs::write(&path, "machine = \"fridge\"\ncommand = \"currents\"\nE1 = 1.0\nEE3 = 1.0\n").unwrap();
    let out = qtm(&["fridge", "currents", "--config", &config]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unknown field `EE3`"), "{}", stderr(&out));
}

#[test]
fn config_file_alone_selects_the_command() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.toml");
    std::fs::write(
        &path,
        "machine = \"fridge\"\ncommand = \"sweep\"\nT = [10.0, 5.0, 4.0]\nE3 = 1.0\ng = 0.01\np = [1e-3]\n\n[numerics]\naxis = \"E1\"\ngrid = [0.2, 0.6, 1.0]\n\n[output]\nformat = \"csv\"\n",
    )
    .unwrap();
    let out = qtm(&["--config", &path.display().to_string()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let params: Vec<String> = stdout(&out).lines().skip(1).map(|l| l.split(',').next().unwrap().to_string()).collect();
    assert_eq!(params, ["0.2", "0.6", "1"]);

    let out = qtm(&["--g", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error[config]"));
}

#[test]
fn engine_run_and_oracle_check() {
    let out = qtm(&["engine", "run", "--T", "10,5", "--E2", "1", "--E3", "0.5", "--g", "0.01", "--p", "0.1", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let row: Vec<String> = stdout(&out).lines().nth(1).unwrap().split(',').map(String::from).collect();
    let eta: f64 = row[12].parse().unwrap();
    assert!((eta - 1.0 / 3.0).abs() < 1e-6);

    let out = run(with(&FRIDGE, &["fridge", "oracle-check", "--p", "1e-2"]));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["result"]["trace_distance"].as_f64().unwrap() < 1e-10);
}

#[test]
fn selftest_passes() {
    let out = qtm(&["selftest", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["result"]["passed"], true);
    assert_eq!(doc["result"]["suites"].as_array().unwrap().len(), 6);
}
