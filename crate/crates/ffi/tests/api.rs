//! The C ABI called from Rust.

use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use tailcav_ffi::*;

const EXAMPLE1: &str = r#"{"states": ["k1", "k2"], "actions_i": ["l", "r"], "actions_j": ["l", "r"],
 "prior": [0.5, 0.5], "timing": "alternating", "payoff": {"kind": "example1"}}"#;

fn game(json: &str) -> (TcStatus, *mut TcGame) {
    let json = CString::new(json).unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { tc_game_from_json(json.as_ptr(), &mut out) };
    (status, out)
}

fn last_error() -> String {
    let p = tc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

#[test]
fn values_of_the_example() {
    let (status, g) = game(EXAMPLE1);
    assert_eq!(status, TcStatus::Ok);
    let mut k = 0;
    assert_eq!(unsafe { tc_game_num_states(g, &mut k) }, TcStatus::Ok);
    assert_eq!(k, 2);

    let p = [0.25, 0.75];
    let mut u = f64::NAN;
    assert_eq!(unsafe { tc_nr_value(g, p.as_ptr(), 2, &mut u) }, TcStatus::Ok);
    assert!((u - 0.25).abs() < 1e-12);
    assert_eq!(tc_u_example1(0.25), u);
    assert!(tc_u_example1(1.5).is_nan());

    let half = [0.5, 0.5];
    let mut cav = f64::NAN;
    assert_eq!(unsafe { tc_cav_value(g, half.as_ptr(), 2, 0.01, &mut cav) }, TcStatus::Ok);
    assert!((cav - 0.25).abs() < 1e-9);

    let mut env = ptr::null_mut();
    assert_eq!(unsafe { tc_envelope_from_game(g, 0.01, &mut env) }, TcStatus::Ok);
    let mut points = [0.0; 4];
    let mut weights = [0.0; 2];
    let mut count = 0;
    let status =
        unsafe { tc_envelope_split(env, half.as_ptr(), 2, points.as_mut_ptr(), weights.as_mut_ptr(), 2, &mut count) };
    assert_eq!(status, TcStatus::Ok);
    assert_eq!(count, 2);
    let mean: f64 = (0..2).map(|n| weights[n] * points[2 * n]).sum();
    assert!((mean - 0.5).abs() < 1e-12);
    let status = unsafe { tc_envelope_split(env, half.as_ptr(), 2, points.as_mut_ptr(), weights.as_mut_ptr(), 1, &mut count) };
    assert_eq!(status, TcStatus::BufferTooSmall);
    unsafe {
        tc_envelope_free(env);
        tc_game_free(g);
    }
}

#[test]
fn envelope_from_samples() {
    let points = [1.0, 0.0, 0.5, 0.5, 0.0, 1.0];
    let values = [0.0, -1.0, 0.0];
    let mut env = ptr::null_mut();
    assert_eq!(
        unsafe { tc_envelope_from_samples(points.as_ptr(), values.as_ptr(), 3, 2, &mut env) },
        TcStatus::Ok
    );
    let mut v = f64::NAN;
    assert_eq!(unsafe { tc_envelope_eval(env, [0.5, 0.5].as_ptr(), 2, &mut v) }, TcStatus::Ok);
    assert!(v.abs() < 1e-12);
    assert_eq!(unsafe { tc_envelope_eval(env, [0.7, 0.7].as_ptr(), 2, &mut v) }, TcStatus::InvalidArgument);
    unsafe { tc_envelope_free(env) };
}

#[test]
fn matrix_value_of_matching_pennies() {
    let entries = [1.0, -1.0, -1.0, 1.0];
    let mut v = f64::NAN;
    let mut x = [0.0; 2];
    let status = unsafe { tc_matrix_value(entries.as_ptr(), 2, 2, &mut v, x.as_mut_ptr(), ptr::null_mut()) };
    assert_eq!(status, TcStatus::Ok);
    assert!(v.abs() < 1e-12);
    assert!((x[0] - 0.5).abs() < 1e-9);
}

#[test]
fn simulate_returns_summary_json() {
    let (_, g) = game(EXAMPLE1);
    let sigma = CString::new(r#"{"kind":"splitting"}"#).unwrap();
    let tau = CString::new(r#"{"kind":"block_response"}"#).unwrap();
    let options = CString::new(r#"{"episodes": 2000, "horizon": 100, "master_seed": 5}"#).unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { tc_simulate(g, sigma.as_ptr(), tau.as_ptr(), options.as_ptr(), &mut out) };
    assert_eq!(status, TcStatus::Ok, "{}", last_error());
    let json: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(out) }.to_str().unwrap()).unwrap();
    assert_eq!(json["episodes"], 2000);
    assert!((json["mean_payoff"].as_f64().unwrap() - 0.25).abs() < 0.1);
    unsafe {
        tc_string_free(out);
        tc_game_free(g);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let (status, g) = game(r#"{"states": ["k1"], "actions_i": ["l"], "actions_j": ["l"], "prior": [0.4],
        "payoff": {"kind": "example1"}}"#);
    assert_eq!(status, TcStatus::InvalidSpec);
    assert!(g.is_null());
    assert!(!last_error().is_empty());

    let (status, g) = game(r#"{"states": ["k1", "k2"], "actions_i": ["a"], "actions_j": ["a"], "prior": [0.5, 0.5],
        "payoff": {"kind": "buchi", "targets": [[0, 0]]}}"#);
    assert_eq!(status, TcStatus::Ok);
    let mut u = 0.0;
    assert_eq!(unsafe { tc_nr_value(g, [0.5, 0.5].as_ptr(), 2, &mut u) }, TcStatus::NoOracle);
    unsafe { tc_game_free(g) };

    let (status, _) = game("not json");
    assert_eq!(status, TcStatus::InvalidArgument);
    assert_eq!(unsafe { tc_game_from_json(ptr::null(), ptr::null_mut()) }, TcStatus::NullPointer);
    assert_eq!(unsafe { tc_nr_value(ptr::null(), ptr::null(), 0, ptr::null_mut()) }, TcStatus::NullPointer);
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(tc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-std=c99", "-I"])
        .arg(format!("{dir}/include"))
        .arg(format!("{dir}/tests/c/smoke.c"))
        .status()
    else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(status.success());
}
