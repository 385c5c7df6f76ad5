//! Process-level behavior of the binary: exit codes, output hygiene, the
//! gallery table, and the report echo round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_obsb")
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run_args(args: &[&str]) -> Output {
    Command::new(binary()).args(args).output().unwrap()
}

#[test]
fn malformed_scenario_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("broken.toml");
    std::fs::write(&scenario, "[chain\nfamily = ").unwrap();
    let out_dir = dir.path().join("out");
    let output = run_args(&[
        "run",
        scenario.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line"), "{stderr}");
    assert!(!out_dir.exists(), "no partial outputs on parse failure");
}

#[test]
fn unknown_analysis_kind_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("bad_kind.toml");
    std::fs::write(
        &scenario,
        r#"
[chain]
family = "random_stochastic"
dimension = 3

[[analyses]]
kind = "frobnicate"
"#,
    )
    .unwrap();
    let output = run_args(&["run", scenario.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn failing_verdicts_still_exit_0() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenario_dir().join("gallery_permutation.toml");
    let output = run_args(&[
        "run",
        scenario.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("uniform: Fail"));
    assert!(stdout.contains("weak: Fail"));
}

#[test]
fn gallery_table_is_stable_with_expected_rows() {
    let first = run_args(&["gallery"]);
    let second = run_args(&["gallery"]);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    let table = String::from_utf8_lossy(&first.stdout);
    assert!(
        table.contains("permutation_cycle | uniform: fail"),
        "{table}"
    );
    assert!(
        table.contains("grid_multiplication | l_weak: pass"),
        "{table}"
    );
}

#[test]
fn properties_zero_trials_is_an_input_error() {
    let output = run_args(&["properties", "--trials", "0"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn properties_clean_run_exits_0() {
    let output = run_args(&["properties", "--seed", "3", "--trials", "6"]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(output.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("suite space"));
    assert!(stdout.contains("suite dobrushin"));
}

#[test]
fn tolerance_override_rejects_unknown_keys() {
    let scenario = scenario_dir().join("two_state.toml");
    let dir = tempfile::tempdir().unwrap();
    let output = run_args(&[
        "run",
        scenario.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--tol",
        "nonsense=1",
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn report_echo_reruns_to_the_same_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenario_dir().join("two_state.toml");
    let out_a = dir.path().join("a");
    let output = run_args(&[
        "run",
        scenario.to_str().unwrap(),
        "--out-dir",
        out_a.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_a.join("two_state_report.json")).unwrap())
            .unwrap();

    // re-serialize the echoed scenario and run it again
    let echoed: obsb_cli::scenario::Scenario =
        serde_json::from_value(report["scenario"].clone()).unwrap();
    let echoed_toml = toml::to_string(&echoed).unwrap();
    let replay = dir.path().join("echo.toml");
    std::fs::write(&replay, echoed_toml).unwrap();
    let out_b = dir.path().join("b");
    let output = run_args(&[
        "run",
        replay.to_str().unwrap(),
        "--out-dir",
        out_b.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let replayed: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_b.join("echo_report.json")).unwrap()).unwrap();
    assert_eq!(
        report["summary"]["verdicts"],
        replayed["summary"]["verdicts"]
    );
    assert_eq!(report["analyses"], replayed["analyses"]);
}
