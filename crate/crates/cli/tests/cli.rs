use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn lumped(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lumped"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rows.csv");
    let cfg = configs().join("experiment_da_vinci.toml");
    let o = lumped(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("trial,t,eps_b,eps_w,eps_q5"));
    assert_eq!(lines.count(), 140);
    assert!(String::from_utf8_lossy(&o.stderr).contains("eps_b mean"));
}

#[test]
fn simulate_then_track() {
    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("s.jsonl");
    let o = lumped(&[
        "simulate",
        "--preset",
        "baxter",
        "--out",
        stream.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = lumped(&[
        "track",
        "--preset",
        "baxter",
        "--input",
        stream.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let est = String::from_utf8(o.stdout).unwrap();
    assert_eq!(est.lines().count(), 140);
    assert!(est.lines().last().unwrap().contains("\"ess_fraction\""));

    // a stream from another scenario is refused
    let o = lumped(&[
        "track",
        "--preset",
        "da-vinci",
        "--input",
        stream.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
}

#[test]
fn oracle_servo_converges() {
    let o = lumped(&[
        "servo",
        "--lump",
        "oracle",
        "--tolerance",
        "0.1",
        "--warmup",
        "5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("converged true"));
    assert!(
        String::from_utf8_lossy(&o.stdout).starts_with("iteration,estimated_error,true_error,step")
    );
}

#[test]
fn lump_check_reports() {
    let o = lumped(&["lump-check", "--trials", "100"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 above"));
}

#[test]
fn config_errors_fail() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "preset = \"da-vinci\"\ntrials = \"many\"\n").unwrap();
    let o = lumped(&["run", "--config", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.toml") && err.contains("line 2"), "{err}");

    let o = lumped(&["run", "--preset", "nope"]);
    assert!(!o.status.success());
    let o = lumped(&["run", "--trials", "0"]);
    assert!(!o.status.success());
}
