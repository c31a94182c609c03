use std::fs;
use std::process::Command;

fn osmd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_osmd"))
}

#[test]
fn fig1_smoke_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = osmd()
        .args(["fig1", "--repeats", "4", "--horizon", "1000", "--workers", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let exp = dir.path().join("fig1");
    for f in ["inf.csv", "inf_shift.csv", "summary.json", "resolved_config.json"] {
        assert!(exp.join(f).exists(), "{f} missing");
    }
    let csv = fs::read_to_string(exp.join("inf.csv")).unwrap();
    assert!(csv.starts_with("run_id,t,cum_regret\n"));
    // 4 runs, checkpoints 1, 2, 4, ..., 512 and 1000
    assert_eq!(csv.lines().count(), 1 + 4 * 11);
}

#[test]
fn bad_config_lists_every_offending_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(
        &path,
        r#"{
            "experiment": "x",
            "algorithms": [{"name": "a", "potential": {"kind": "negentropy"}, "estimator": "psychic", "eta": 0.1}],
            "instance": {"kind": "k_armed_bandit", "k": 2, "losses": {"kind": "rademacher"}},
            "horizon": -3,
            "repeats": 1,
            "out": "o",
            "extra": true
        }"#,
    )
    .unwrap();
    let out = osmd().args(["run", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for field in ["algorithms[0]", "horizon", "seed", "extra"] {
        assert!(err.contains(field), "{field} not reported in:\n{err}");
    }
}

#[test]
fn run_and_sweep_from_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("losses.csv"), "l1,l2\n0.0,1.0\n0.2,0.9\n0.1,0.7\n").unwrap();
    let base = r#"{
        "experiment": "seq",
        "algorithms": [{"name": "exp3", "potential": {"kind": "negentropy"}, "estimator": "importance_weighted", "eta": 0.5}],
        "instance": {"kind": "k_armed_bandit", "k": 2, "losses": {"kind": "fixed_sequence", "path": "losses.csv"}},
        "horizon": 3,
        "repeats": 2,
        "seed": 4,
        "out": "OUT"
    }"#
    .replace("OUT", &dir.path().join("out").to_string_lossy());
    fs::write(dir.path().join("run.json"), &base).unwrap();
    let out = osmd().args(["run", "--workers", "1", "--config"]).arg(dir.path().join("run.json")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/seq/exp3.csv").exists());

    let sweep = format!(r#"{{"base": {base}, "grid": {{"/algorithms/0/eta": [0.1, "auto"]}}}}"#);
    fs::write(dir.path().join("sweep.json"), sweep).unwrap();
    let out = osmd().args(["sweep", "--config"]).arg(dir.path().join("sweep.json")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/seq_000/exp3.csv").exists());
    assert!(dir.path().join("out/seq_001/summary.json").exists());
    assert!(dir.path().join("out/seq_sweep.json").exists());
}

#[test]
fn check_exit_status() {
    let ok = osmd().args(["check", "--suite", "exp3"]).output().unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS exp3"));
    let bad = osmd().args(["check", "--suite", "nonsense"]).output().unwrap();
    assert!(!bad.status.success());
}
