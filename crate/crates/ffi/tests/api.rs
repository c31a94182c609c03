use std::ffi::{CStr, CString};
use std::ptr;

use osmd_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(osmd_last_error_message()) }.to_string_lossy().into_owned()
}

fn potential(json: &str) -> *mut OsmdPotential {
    let json = CString::new(json).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { osmd_potential_from_json(json.as_ptr(), &mut out) }, OsmdStatus::Ok);
    assert!(!out.is_null());
    out
}

#[test]
fn exp3_step_matches_multiplicative_weights() {
    let f = potential(r#"{"kind":"negentropy"}"#);
    let x = [0.2, 0.3, 0.5];
    let e = [1.0, 0.0, 2.0];
    let eta = 0.4;
    let mut y = [0.0; 3];
    let status = unsafe { osmd_mirror_step_simplex(f, x.as_ptr(), e.as_ptr(), 3, eta, y.as_mut_ptr()) };
    assert_eq!(status, OsmdStatus::Ok, "{}", last_error());
    let w: Vec<f64> = x.iter().zip(&e).map(|(xi, ei)| xi * (-eta * ei).exp()).collect();
    let s: f64 = w.iter().sum();
    for (yi, wi) in y.iter().zip(&w) {
        assert!((yi - wi / s).abs() < 1e-12);
    }
    let mut d = -1.0;
    assert_eq!(unsafe { osmd_potential_bregman(f, y.as_ptr(), x.as_ptr(), 3, &mut d) }, OsmdStatus::Ok);
    assert!(d > 0.0);
    assert!(last_error().is_empty());
    unsafe { osmd_potential_free(f) };
}

#[test]
fn ball_step_stays_in_ball() {
    let f = potential(r#"{"kind":"clipped_lp","p":1.5,"d":3}"#);
    let x = [0.0; 3];
    let e = [0.5, -0.5, 0.2];
    let mut y = [0.0; 3];
    let status = unsafe { osmd_mirror_step_ball(f, 1.5, x.as_ptr(), e.as_ptr(), 3, 10.0, y.as_mut_ptr()) };
    assert_eq!(status, OsmdStatus::Ok, "{}", last_error());
    let norm: f64 = y.iter().map(|v: &f64| v.abs().powf(1.5)).sum::<f64>().powf(1.0 / 1.5);
    assert!(norm <= 1.0 + 1e-9);
    assert!(y[0] < 0.0 && y[1] > 0.0);
    unsafe { osmd_potential_free(f) };
}

#[test]
fn errors_set_status_and_message() {
    let bad = CString::new(r#"{"kind":"clipped_lp","p":3.0,"d":2}"#).unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { osmd_potential_from_json(bad.as_ptr(), &mut out) };
    assert_ne!(status, OsmdStatus::Ok);
    assert!(out.is_null());
    assert!(!last_error().is_empty());

    let garbage = CString::new("{").unwrap();
    assert_eq!(unsafe { osmd_potential_from_json(garbage.as_ptr(), &mut out) }, OsmdStatus::Parse);
    assert_eq!(unsafe { osmd_potential_from_json(ptr::null(), &mut out) }, OsmdStatus::NullPointer);

    let f = potential(r#"{"kind":"negentropy"}"#);
    let mut v = 0.0;
    let outside = [1.5, -0.5];
    assert_eq!(unsafe { osmd_potential_value(f, outside.as_ptr(), 2, &mut v) }, OsmdStatus::Domain);
    assert_eq!(unsafe { osmd_potential_value(f, outside.as_ptr(), 2, ptr::null_mut()) }, OsmdStatus::NullPointer);
    unsafe { osmd_potential_free(f) };
    unsafe { osmd_potential_free(ptr::null_mut()) };
}

#[test]
fn graph_handle() {
    let text = CString::new("5\n1 2\n2 3\n3 4\n4 5\n5 1\n1 1\n2 2\n3 3\n4 4\n5 5\n").unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { osmd_graph_from_edge_list(text.as_ptr(), &mut g) }, OsmdStatus::Ok);
    let (mut alpha, mut exact, mut strong) = (0usize, false, false);
    assert_eq!(unsafe { osmd_graph_independence_number(g, &mut alpha, &mut exact) }, OsmdStatus::Ok);
    assert_eq!((alpha, exact), (2, true));
    assert_eq!(unsafe { osmd_graph_is_strongly_observable(g, &mut strong) }, OsmdStatus::Ok);
    assert!(strong);
    unsafe { osmd_graph_free(g) };
}

#[test]
fn tune_eta_and_version() {
    let (mut eta, mut bound) = (0.0, 0.0);
    assert_eq!(unsafe { osmd_tune_eta(1.0, 1.0, 0.0, 1, &mut eta, &mut bound) }, OsmdStatus::Ok);
    assert!((eta - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(unsafe { osmd_tune_eta(-1.0, 1.0, 0.0, 1, &mut eta, &mut bound) }, OsmdStatus::InvalidInput);
    let v = unsafe { CStr::from_ptr(osmd_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn run_config_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = serde_json::json!({
        "experiment": "ffi",
        "algorithms": [{"name": "inf", "potential": {"kind": "tsallis_half"}, "estimator": "shifted", "eta": "auto"}],
        "instance": {"kind": "k_armed_bandit", "k": 3, "losses": {"kind": "bernoulli", "means": [0.2, 0.5, 0.5]}},
        "horizon": 200, "repeats": 3, "seed": 1, "out": dir.path()
    });
    let text = CString::new(cfg.to_string()).unwrap();
    let mut summary = ptr::null_mut();
    let status = unsafe { osmd_run_config_json(text.as_ptr(), 2, &mut summary) };
    assert_eq!(status, OsmdStatus::Ok, "{}", last_error());
    let json: serde_json::Value =
        serde_json::from_str(unsafe { CStr::from_ptr(summary) }.to_str().unwrap()).unwrap();
    unsafe { osmd_string_free(summary) };
    assert_eq!(json["experiment"], "ffi");
    assert!(dir.path().join("ffi/inf.csv").exists());

    let bad = CString::new(r#"{"experiment": "x"}"#).unwrap();
    let mut none = ptr::null_mut();
    assert_eq!(unsafe { osmd_run_config_json(bad.as_ptr(), 1, &mut none) }, OsmdStatus::Config);
    assert!(last_error().contains("horizon"));
}
