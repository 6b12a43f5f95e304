use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use vaa_observer::analysis::Basin;
use vaa_observer::observer::Gains;
use vaa_observer::report::{AnalysisReport, MonteCarloReport};
use vaa_observer::simulator::cli::{cli_main, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK};
use vaa_observer::simulator::Scenario;
use vaa_observer::trajectory::TrajectoryRecord;
use vaa_observer::vehicle_model::{AxisSignal, VectorSignal};

fn vaa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vaa")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_151_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    let res = vaa(&["run", "--scenario", "paper2022", "--out", path(&out)]);
    assert_eq!(res.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(TrajectoryRecord::from_csv_str(&text).unwrap().len(), 151);
}

#[test]
fn run_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert_eq!(cli_main(["vaa", "run", "--scenario", "paper2022-geometric", "--out", path(&a)]), EXIT_OK);
    assert_eq!(cli_main(["vaa", "run", "--scenario", "paper2022-geometric", "--out", path(&b)]), EXIT_OK);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn scenarios_lists_builtins() {
    let res = vaa(&["scenarios"]);
    assert_eq!(res.status.code(), Some(EXIT_OK));
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("paper2022 ")));
}

#[test]
fn scenario_file_round_trips_through_run() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.json");
    fs::write(&file, Scenario::paper2022().to_json_string()).unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert_eq!(cli_main(["vaa", "run", "--scenario", path(&file), "--out", path(&a)]), EXIT_OK);
    assert_eq!(cli_main(["vaa", "run", "--scenario", "paper2022", "--out", path(&b)]), EXIT_OK);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn malformed_scenario_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    fs::write(&file, "{\n  \"schema\": \"v1\",\n  \"horizon\": \"long\"\n}\n").unwrap();
    let res = vaa(&["run", "--scenario", path(&file), "--out", path(&dir.path().join("x.csv"))]);
    assert_eq!(res.status.code(), Some(EXIT_CONFIG));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("line 3"), "{stderr}");
    assert!(stderr.contains("horizon"), "{stderr}");
}

#[test]
fn missing_scenario_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    assert_eq!(cli_main(["vaa", "run", "--scenario", "no-such-scenario", "--out", path(&out)]), EXIT_CONFIG);
    assert_eq!(cli_main(["vaa", "run", "--scenario"]), EXIT_CONFIG);
    assert_eq!(cli_main(["vaa", "frobnicate"]), EXIT_CONFIG);
}

#[test]
fn numerical_blow_up_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::paper2022();
    s.inputs.accel =
        VectorSignal([AxisSignal::sine(1e300, 1.0), AxisSignal::constant(1e300), AxisSignal::constant(0.0)]);
    s.gains = Gains::new(1e200, 1e200).unwrap();
    let file = dir.path().join("boom.json");
    fs::write(&file, s.to_json_string()).unwrap();
    let res = vaa(&["run", "--scenario", path(&file), "--out", path(&dir.path().join("x.csv"))]);
    assert_eq!(res.status.code(), Some(EXIT_NUMERIC));
    assert!(String::from_utf8_lossy(&res.stderr).contains("row"));
}

#[test]
fn analyze_empty_csv_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    fs::write(&csv, "").unwrap();
    let out = dir.path().join("r.json");
    assert_eq!(cli_main(["vaa", "analyze", "--traj", path(&csv), "--out", path(&out)]), EXIT_CONFIG);
    let header_only =
        format!("{}\n{}\n", vaa_observer::trajectory::SCHEMA_LINE, vaa_observer::trajectory::COLUMNS.join(","));
    fs::write(&csv, header_only).unwrap();
    assert_eq!(cli_main(["vaa", "analyze", "--traj", path(&csv), "--out", path(&out)]), EXIT_CONFIG);
}

#[test]
fn analyze_reports_verdict_and_excitation() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let out = dir.path().join("report.json");
    assert_eq!(cli_main(["vaa", "run", "--scenario", "paper2022-long", "--out", path(&csv)]), EXIT_OK);
    let code = cli_main(["vaa", "analyze", "--traj", path(&csv), "--out", path(&out), "--scenario", "paper2022-long"]);
    assert_eq!(code, EXIT_OK);
    let report: AnalysisReport = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.rows, 3001);
    assert_eq!(report.verdict.basin, Basin::StableIdentity);
    assert!(report.pe_velocity_residual.min_lambda2 > 0.0);
    let sa = report.scenario.unwrap();
    assert!(sa.synchrony_residual < 5e-6);
    assert!(sa.pe_filtered_accel.min_lambda2 > 0.0);
}

#[test]
fn montecarlo_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("short.json");
    let base = Scenario { horizon: 1.0, ..Scenario::builtin("paper2022-long").unwrap() };
    fs::write(&file, base.to_json_string()).unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        let code =
            cli_main(["vaa", "montecarlo", "--n", "4", "--seed", "42", "--out", path(out), "--scenario", path(&file)]);
        assert_eq!(code, EXIT_OK);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let report: MonteCarloReport = serde_json::from_str(&fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(report.runs.len(), 4);
    assert_eq!(report.stable_identity + report.near_unstable_set + report.diverged, 4);
    assert!(report.runs.iter().enumerate().all(|(i, r)| r.index == i));
    let zero = cli_main(["vaa", "montecarlo", "--n", "0", "--seed", "1", "--out", path(&a)]);
    assert_eq!(zero, EXIT_CONFIG);
}
