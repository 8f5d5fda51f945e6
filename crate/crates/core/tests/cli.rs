//! The `fragmenta` binary: exit codes, run directories and manifests.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

fn fragmenta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fragmenta")).args(args).env("FRAGMENTA_LOG", "error").output().unwrap()
}

fn only_run_dir(base: &Path) -> PathBuf {
    let dirs: Vec<PathBuf> = std::fs::read_dir(base).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.into_iter().next().unwrap()
}

#[test]
fn config_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"kernel": {"type": "pure-death", "mortality": 1.0}, "t_end": 1.0, "scale": {"alpha_zero": 1.0}}"#,
    )
    .unwrap();
    let out = fragmenta(&["solve-series", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("alpha_zero") && err.contains("alpha0"), "{err}");

    std::fs::write(
        &bad,
        r#"{"kernel": {"type": "pure-death", "mortality": 1.0}, "t_end": 1.0,
        "scale": {"alpha0": -2.0, "alpha_star": -1.0}}"#,
    )
    .unwrap();
    let out = fragmenta(&["solve-rk4", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha_star"));

    let out = fragmenta(&["simulate", "--config", tmp.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = fragmenta(&["simulate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn series_beyond_the_certified_range_exits_with_1() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("contact"))
        .unwrap()
        .replace("\"horizon_fraction\": 0.4", "\"horizon_fraction\": 0.75");
    let config = tmp.path().join("far.json");
    std::fs::write(&config, text).unwrap();
    let out = fragmenta(&[
        "solve-series",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().join("runs").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    // T(alpha_star) = 2/(e - 1) for this scenario.
    assert!(err.contains("T(alpha_star) = 1.16395"), "{err}");
}

#[test]
fn compare_on_pure_death_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fragmenta(&[
        "compare",
        "--config",
        scenario("pure-death").to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--emit-plots",
        "--jobs",
        "2",
        "--seed",
        "11",
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("series vs closed form") && stdout.contains("rk4 vs closed form"), "{stdout}");
    assert!(!stdout.contains("FAIL"));

    let dir = only_run_dir(tmp.path());
    assert!(dir.file_name().unwrap().to_str().unwrap().starts_with("compare-"));
    for f in [
        "comparison.csv",
        "estimates.csv",
        "snapshots.csv",
        "comparison.gp",
        "config.resolved.json",
        "solution/order_2.csv",
    ] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["jobs"], 2);
    assert_eq!(manifest["overrides"][0], "seed = 11");
    let defaults: Vec<&str> =
        manifest["defaults_applied"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(defaults.contains(&"scale.q = 2.0"), "{defaults:?}");
    assert!(manifest["results"]["horizon"].is_null(), "infinite horizon serializes as null");
    assert!(manifest["results"]["cross_validation"]["passed"].as_bool().unwrap());
}

#[test]
fn validate_prints_the_suite_table() {
    let out = fragmenta(&["validate"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 5, "{stdout}");
    assert!(stdout.contains("100 instances"));
}
