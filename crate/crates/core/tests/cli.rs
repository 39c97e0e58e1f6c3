//! End-to-end runs of the command-line front end.

use std::fs;
use std::path::Path;

use tailcav::cli::{exit_code, read_samples, run};
use tailcav::solver::concavify;
use tailcav::Error;

const EXAMPLE1: &str = r#"{"states": ["k1", "k2"], "actions_i": ["l", "r"], "actions_j": ["l", "r"],
 "prior": [0.5, 0.5], "timing": "alternating", "payoff": {"kind": "example1"}}"#;

fn write_spec(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_to_string(args: &[&str]) -> Result<String, Error> {
    let mut out = Vec::new();
    run(std::iter::once("tailcav").chain(args.iter().copied()), &mut out)?;
    Ok(String::from_utf8(out).unwrap())
}

#[test]
fn nrvalue_prints_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "ex1.json", EXAMPLE1);
    let out = run_to_string(&["nrvalue", "--spec", &spec, "--mesh", "0.25"]).unwrap();
    assert_eq!(out, "p,u\n0,1\n0.25,0.25\n0.5,0\n0.75,-0.25\n1,-1\n");
}

#[test]
fn cav_round_trips_through_samples() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "ex1.json", EXAMPLE1);
    let csv = run_to_string(&["nrvalue", "--spec", &spec, "--mesh", "0.01", "--with-kinks"]).unwrap();
    let samples = dir.path().join("u.csv");
    fs::write(&samples, csv).unwrap();

    let (grid, values) = read_samples(&samples).unwrap();
    let env = concavify(&grid, &values).unwrap();
    let from_samples: serde_json::Value = serde_json::from_str(
        &run_to_string(&["cav", "--samples", samples.to_str().unwrap(), "--p", "0.5"]).unwrap(),
    )
    .unwrap();
    let from_spec: serde_json::Value =
        serde_json::from_str(&run_to_string(&["cav", "--spec", &spec, "--p", "0.5"]).unwrap()).unwrap();
    let a = from_samples["value"].as_f64().unwrap();
    let b = from_spec["value"].as_f64().unwrap();
    assert!((a - 0.25).abs() < 1e-9 && (a - b).abs() < 1e-9);
    assert!((env.eval_scalar(0.5).unwrap() - a).abs() < 1e-12);
    let weights: Vec<f64> = serde_json::from_value(from_spec["weights"].clone()).unwrap();
    assert_eq!(weights.len(), 2);
}

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "ex1.json", EXAMPLE1);
    let out_dir = dir.path().join("run");
    let summary = run_to_string(&[
        "simulate",
        "--spec",
        &spec,
        "--sigma",
        r#"{"kind":"splitting"}"#,
        "--tau",
        r#"{"kind":"block_response"}"#,
        "--episodes",
        "400",
        "--horizon",
        "200",
        "--trajectory",
        "--out",
        out_dir.to_str().unwrap(),
    ])
    .unwrap();
    let summary: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(summary["episodes"], 400);
    for name in ["summary.json", "episodes.csv", "trajectory.csv"] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    let episodes = fs::read_to_string(out_dir.join("episodes.csv")).unwrap();
    assert_eq!(episodes.lines().count(), 401);

    // Same seed, same summary.
    let again = run_to_string(&[
        "simulate",
        "--spec",
        &spec,
        "--sigma",
        r#"{"kind":"splitting"}"#,
        "--tau",
        r#"{"kind":"block_response"}"#,
        "--episodes",
        "400",
        "--horizon",
        "200",
    ])
    .unwrap();
    let again: serde_json::Value = serde_json::from_str(&again).unwrap();
    assert_eq!(summary["mean_payoff"], again["mean_payoff"]);
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_spec(
        dir.path(),
        "bad.json",
        r#"{"states": ["k1", "k2"], "actions_i": ["l"], "actions_j": ["l"], "prior": [0.7, 0.7],
            "payoff": {"kind": "example1"}}"#,
    );
    let err = run_to_string(&["nrvalue", "--spec", &bad]).unwrap_err();
    assert_eq!(exit_code(&err), 2, "{err}");

    let buchi = write_spec(
        dir.path(),
        "buchi.json",
        r#"{"states": ["k1", "k2"], "actions_i": ["a", "b"], "actions_j": ["a", "b"], "prior": [0.5, 0.5],
            "payoff": {"kind": "buchi", "targets": [[0, 1]]}}"#,
    );
    let err = run_to_string(&["nrvalue", "--spec", &buchi]).unwrap_err();
    assert_eq!(exit_code(&err), 3, "{err}");

    let err = run_to_string(&["cav", "--spec", &write_spec(dir.path(), "ok.json", EXAMPLE1), "--p", "1.5"]).unwrap_err();
    assert_eq!(exit_code(&err), 1, "{err}");
}

#[test]
fn gap_experiment_runs_small() {
    let out = run_to_string(&[
        "example1-gap",
        "--episodes",
        "200",
        "--horizon",
        "500",
        "--mixed-horizon",
        "300",
        "--rollouts",
        "4",
        "--rollout-horizon",
        "200",
    ])
    .unwrap();
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["panel"].as_array().unwrap().len(), 5);
    assert!(report["minmax_side_panel_bound"].as_f64().unwrap() >= 0.45);
}
