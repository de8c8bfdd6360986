use std::process::Command;

use parascan_cli::rows::{read_rows, Metric};

fn bench() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bench"));
    cmd.env_remove("PARASCAN_THREADS");
    cmd
}

#[test]
fn unknown_method_is_usage_error() {
    let out = bench().args(["verify", "--methods", "KF"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_device_count_is_usage_error() {
    let out = bench().args(["simulate", "--devices", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_subcommand_is_usage_error() {
    let out = bench().output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn incompatible_pairing_gives_header_only() {
    let out = bench().args(["simulate", "--methods", "SEQ_KF", "--algs", "blelloch"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "method,alg,T,precision,metric,value,seed,threads,devices\n");
}

#[test]
fn out_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim.csv");
    let status = bench()
        .args(["simulate", "--T", "8,16", "--methods", "PKF", "--algs", "blelloch", "--sim-threads", "4", "--out"])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let rows = read_rows(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.method == "PKF" && r.alg == "blelloch" && r.threads == 4));
    let time = |t: usize| rows.iter().find(|r| r.t == t && r.metric == Metric::TimeUnits).unwrap().value;
    assert!(time(8) < time(16));
}

#[test]
fn thread_count_from_environment() {
    let out = bench()
        .env("PARASCAN_THREADS", "3")
        .args(["run", "--T", "8", "--methods", "PKF", "--algs", "blelloch", "--runs", "1", "--warmup", "0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let rows = read_rows(out.stdout.as_slice()).unwrap();
    let wall = rows.iter().find(|r| r.metric == Metric::WallMedianS).unwrap();
    assert_eq!(wall.threads, 3);
}

#[test]
fn verify_passes_on_small_grid() {
    let out = bench()
        .args(["verify", "--T", "5,17", "--precision", "f64", "--methods", "PKF,PTFS,SEQ_TFS", "--algs", "sengupta-b,sequential", "--threads", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_rows(out.stdout.as_slice()).unwrap();
    assert!(rows.iter().all(|r| r.metric == Metric::MaxRelErr && r.value <= 1e-5));
    assert_eq!(rows.len(), 6);
}
