//! End-to-end tests of the `alphaforge` binary: exit codes, artifact
//! layout, determinism, resumability, and provider record/replay.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_alphaforge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name))
        .unwrap_or_else(|e| panic!("reading {name} in {}: {e}", dir.display()))
}

fn gen_data(dir: &Path, symbols: &str, days: &str) {
    ok(&[
        "gen-data",
        "--symbols",
        symbols,
        "--days",
        days,
        "--seed",
        "1",
        "--output-dir",
        dir.to_str().unwrap(),
    ]);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["gen-data"]).status.code(), Some(2)); // missing --output-dir
    // An unreadable data file is a usage error.
    let out = run(&["eval", "--expr", "$close", "--data", "/nonexistent/market.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_expression_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    gen_data(tmp.path(), "6", "60");
    let data = tmp.path().join("market.csv");
    let out = run(&["eval", "--expr", "TS_MEAN($close", "--data", data.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn gen_data_is_deterministic_and_manifested() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    gen_data(a.path(), "8", "100");
    gen_data(b.path(), "8", "100");
    assert_eq!(read(a.path(), "market.csv"), read(b.path(), "market.csv"));
    let manifest: serde_json::Value = serde_json::from_str(&read(a.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["command"], "gen-data");
    let outputs: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(outputs, ["market.csv", "market.json"]);
}

#[test]
fn eval_reports_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    gen_data(tmp.path(), "8", "120");
    let data = tmp.path().join("market.csv");
    let out_dir = tmp.path().join("eval");
    let out = ok(&[
        "eval",
        "--expr",
        "$vwap/$close-1",
        "--data",
        data.to_str().unwrap(),
        "--on",
        "all",
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["ic_mean"].as_f64().unwrap().is_finite());
    assert!(report["rank_ic_mean"].as_f64().unwrap().is_finite());
    let on_disk: serde_json::Value = serde_json::from_str(&read(&out_dir, "report.json")).unwrap();
    assert_eq!(report, on_disk);
}

#[test]
fn backtest_writes_ledger() {
    let tmp = tempfile::tempdir().unwrap();
    gen_data(tmp.path(), "8", "120");
    let data = tmp.path().join("market.csv");
    let out_dir = tmp.path().join("bt");
    let out = ok(&[
        "backtest",
        "--expr",
        "-TS_MEAN($close/DELAY($close,1)-1,5)",
        "--data",
        data.to_str().unwrap(),
        "--topk",
        "3",
        "--n-drop",
        "1",
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["n_days"].as_u64().unwrap() > 100);
    assert!(summary["arr"].as_f64().unwrap().is_finite());
    let daily = read(&out_dir, "daily.jsonl");
    assert_eq!(daily.lines().count(), summary["n_days"].as_u64().unwrap() as usize);
    // The factor needs a warm-up window, so check the final day's book.
    let last: serde_json::Value = serde_json::from_str(daily.lines().last().unwrap()).unwrap();
    assert_eq!(last["holdings"].as_array().unwrap().len(), 3);
    let trades = read(&out_dir, "trades.csv");
    assert!(trades.starts_with("date,symbol,side,"));
}

fn mine(data: &Path, out_dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "mine",
        "--data",
        data.to_str().unwrap(),
        "--output-dir",
        out_dir.to_str().unwrap(),
        "--seed",
        "7",
        "--directions",
        "2",
        "--iterations",
        "1",
        "--factors-per-hypothesis",
        "2",
    ];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn mine_pipeline_resume_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    gen_data(tmp.path(), "10", "150");
    let data = tmp.path().join("market.csv");
    let out_dir = tmp.path().join("run");

    let out = mine(&data, &out_dir, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log1 = read(&out_dir, "trajectories.jsonl");
    assert!(!log1.is_empty());
    for line in log1.lines() {
        let t: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(t["schema"], "trajectory.v1");
    }
    let pool: serde_json::Value = serde_json::from_str(&read(&out_dir, "pool.json")).unwrap();
    assert!(pool["pool"]["total_mined"].as_u64().unwrap() > 0);

    // Re-running the identical command resumes and leaves the log unchanged.
    let out2 = mine(&data, &out_dir, &[]);
    assert!(out2.status.success(), "{}", String::from_utf8_lossy(&out2.stderr));
    assert_eq!(read(&out_dir, "trajectories.jsonl"), log1);

    // A conflicting configuration refuses to resume.
    let out3 = mine(&data, &out_dir, &["--lambda", "0.2"]);
    assert_eq!(out3.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out3.stderr).contains("resume"));

    // pool + report consume the artifacts.
    let corr_dir = tmp.path().join("pool-out");
    let pool_out = ok(&[
        "pool",
        "--pool",
        out_dir.join("pool.json").to_str().unwrap(),
        "--output-dir",
        corr_dir.to_str().unwrap(),
    ]);
    assert!(!pool_out.stdout.is_empty());
    assert!(read(&corr_dir, "correlations.csv").contains(','));

    let rep_dir = tmp.path().join("report-out");
    ok(&[
        "report",
        "--log",
        out_dir.join("trajectories.jsonl").to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--output-dir",
        rep_dir.to_str().unwrap(),
    ]);
    assert!(read(&rep_dir, "rank_ic_by_round.csv").starts_with("round,"));
    assert!(read(&rep_dir, "cumulative_excess.csv").starts_with("date,"));
}

#[test]
fn mine_determinism_across_directories() {
    let tmp = tempfile::tempdir().unwrap();
    gen_data(tmp.path(), "10", "150");
    let data = tmp.path().join("market.csv");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(mine(&data, &a, &[]).status.success());
    assert!(mine(&data, &b, &[]).status.success());
    assert_eq!(read(&a, "trajectories.jsonl"), read(&b, "trajectories.jsonl"));
    assert_eq!(read(&a, "pool.json"), read(&b, "pool.json"));
}

#[test]
fn record_then_replay_reproduces_run() {
    let tmp = tempfile::tempdir().unwrap();
    gen_data(tmp.path(), "10", "150");
    let data = tmp.path().join("market.csv");
    let rec_dir = tmp.path().join("rec");
    let tape = tmp.path().join("tape.jsonl");
    let out = mine(&data, &rec_dir, &["--record", tape.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tape.exists());

    let rep_dir = tmp.path().join("rep");
    let out = mine(
        &data,
        &rep_dir,
        &["--provider", "replay", "--replay-file", tape.to_str().unwrap()],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        read(&rec_dir, "trajectories.jsonl"),
        read(&rep_dir, "trajectories.jsonl")
    );
}

#[test]
fn config_file_merges_under_flags() {
    let tmp = tempfile::tempdir().unwrap();
    gen_data(tmp.path(), "10", "150");
    let data = tmp.path().join("market.csv");
    let cfg_path = tmp.path().join("mine.json");
    std::fs::write(&cfg_path, r#"{"seed": 7, "iterations": 1, "factors_per_hypothesis": 2}"#).unwrap();

    // Flags + config: --directions flag beside config-supplied values.
    let via_config = tmp.path().join("via-config");
    let out = run(&[
        "mine",
        "--data",
        data.to_str().unwrap(),
        "--output-dir",
        via_config.to_str().unwrap(),
        "--config",
        cfg_path.to_str().unwrap(),
        "--directions",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let via_flags = tmp.path().join("via-flags");
    assert!(mine(&data, &via_flags, &[]).status.success());
    assert_eq!(
        read(&via_config, "trajectories.jsonl"),
        read(&via_flags, "trajectories.jsonl")
    );

    // Unknown config keys are rejected as usage errors.
    std::fs::write(&cfg_path, r#"{"sede": 7}"#).unwrap();
    let bad = run(&[
        "mine",
        "--data",
        data.to_str().unwrap(),
        "--output-dir",
        tmp.path().join("bad").to_str().unwrap(),
        "--config",
        cfg_path.to_str().unwrap(),
    ]);
    assert_eq!(bad.status.code(), Some(2));
}
