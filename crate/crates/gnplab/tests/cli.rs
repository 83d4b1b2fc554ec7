//! End-to-end checks of the binary: output formats, exit codes, and
//! byte-stable artifacts.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gnplab"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// Value of a `key=value` line in plain stdout.
fn field(stdout: &str, key: &str) -> f64 {
    let prefix = format!("{key}=");
    stdout
        .lines()
        .find_map(|line| line.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("missing field {key} in:\n{stdout}"))
        .parse()
        .unwrap()
}

#[test]
fn solve_rho_prints_the_closed_form() {
    let out = bin()
        .args(["solve-rho", "--n", "2", "--p", "0.75"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!((field(&text, "rho") - 8.0 / 9.0).abs() < 1e-9);
    assert!((field(&text, "pi") - 0.25).abs() < 1e-9);
    assert!((field(&text, "dual_mean") - 0.5).abs() < 1e-9);
}

#[test]
fn census_lists_singletons_without_edges() {
    let out = bin()
        .args(["census", "--n", "5", "--p", "0", "--seed", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(stdout_of(&out).trim(), "1,1,1,1,1");
}

#[test]
fn census_pipelines_both_run() {
    for pipeline in ["lazy", "edges"] {
        let out = bin()
            .args([
                "census", "--n", "50", "--p", "0.1", "--seed", "7", "--pipeline", pipeline,
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "pipeline {pipeline} failed");
        let text = stdout_of(&out);
        let sizes: Vec<u32> = text.trim().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(sizes.iter().map(|&s| s as u64).sum::<u64>(), 50);
        assert!(sizes.windows(2).all(|w| w[0] >= w[1]), "sizes not sorted");
    }
}

#[test]
fn oracle_enum_prints_closed_forms() {
    let out = bin()
        .args(["oracle-enum", "--n", "2", "--p", "0.3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!((field(&text, "P(L1=2)") - 0.3).abs() < 1e-12);
    assert!((field(&text, "P(L1=1)") - 0.7).abs() < 1e-12);

    let out = bin()
        .args(["oracle-enum", "--n", "3", "--p", "0.5"])
        .output()
        .unwrap();
    let text = stdout_of(&out);
    assert_eq!(field(&text, "P(L1=3)"), 0.5);

    let out = bin()
        .args(["oracle-enum", "--fanout", "2", "--p", "0.25", "--max-size", "8"])
        .output()
        .unwrap();
    let text = stdout_of(&out);
    assert!((field(&text, "P(size=1)") - 0.5625).abs() < 1e-12);
}

#[test]
fn oracle_enum_needs_exactly_one_law() {
    let out = bin().args(["oracle-enum", "--p", "0.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .args(["oracle-enum", "--n", "3", "--fanout", "2", "--p", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    let missing = bin()
        .args(["exp-l1", "--config", "/nonexistent/nowhere.conf"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr_of(&missing).contains("cannot read config"));

    let unknown_flag = bin().args(["census", "--bogus"]).output().unwrap();
    assert_eq!(unknown_flag.status.code(), Some(2));

    let unknown_cmd = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(unknown_cmd.status.code(), Some(2));

    let bad_domain = bin()
        .args(["census", "--n", "5", "--p", "1.5", "--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(bad_domain.status.code(), Some(2));
}

#[test]
fn mismatched_experiment_config_exits_2() {
    let dir = tmp_dir("mismatch");
    let conf = dir.join("l1.conf");
    fs::write(&conf, "experiment = l1\nexponent = 0.2\nn_values = 100000\n").unwrap();
    let out = bin()
        .args(["exp-duality", "--config", conf.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("this subcommand runs `duality`"));
}

#[test]
fn experiment_run_writes_artifacts_and_repeats_bytes() {
    let dir = tmp_dir("repeat");
    let conf = dir.join("l1.conf");
    fs::write(
        &conf,
        "experiment = l1\nmaster_seed = 9\nexponent = 0.2\nn_values = 100000\nreplicates = 3\n",
    )
    .unwrap();

    let run = |out_dir: &str| -> Output {
        bin()
            .args([
                "exp-l1",
                "--config",
                conf.to_str().unwrap(),
                "--out",
                dir.join(out_dir).to_str().unwrap(),
            ])
            .output()
            .unwrap()
    };
    let first = run("a");
    assert!(
        first.status.success(),
        "run failed: {}",
        stderr_of(&first)
    );
    let second = run("b");
    assert_eq!(stdout_of(&first), stdout_of(&second));

    for name in ["records.jsonl", "summary.json", "summary.csv"] {
        let a = fs::read(dir.join("a").join(name)).unwrap();
        let b = fs::read(dir.join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        assert!(!a.is_empty());
    }

    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("a").join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["experiment"], "l1");
    assert_eq!(summary["all_pass"], true);
    assert!(summary["config_hash"].as_str().unwrap().len() == 16);

    let records = fs::read_to_string(dir.join("a").join("records.jsonl")).unwrap();
    // Header line plus one line per replicate.
    assert_eq!(records.lines().count(), 4);
    for line in records.lines() {
        let _: serde_json::Value = serde_json::from_str(line).unwrap();
    }
}

#[test]
fn seed_override_wins_and_shows_in_the_echo() {
    let dir = tmp_dir("seed-override");
    let conf = dir.join("l1.conf");
    fs::write(
        &conf,
        "experiment = l1\nmaster_seed = 9\nexponent = 0.2\nn_values = 100000\nreplicates = 2\n",
    )
    .unwrap();
    let out = bin()
        .args([
            "exp-l1",
            "--config",
            conf.to_str().unwrap(),
            "--out",
            dir.join("out").to_str().unwrap(),
            "--seed",
            "123",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(summary["config"]["master_seed"], 123);
}

#[test]
fn csv_echo_matches_the_written_file() {
    let dir = tmp_dir("csv-echo");
    let conf = dir.join("lower.conf");
    fs::write(
        &conf,
        "experiment = lower-bound\nmaster_seed = 5\nn = 50000\neps = 0.12\nl = 1500\nroots = 400\n",
    )
    .unwrap();
    let out = bin()
        .args([
            "exp-lower",
            "--config",
            conf.to_str().unwrap(),
            "--out",
            dir.join("out").to_str().unwrap(),
            "--format",
            "csv",
        ])
        .output()
        .unwrap();
    // Verdict pass/fail is irrelevant here; only the echo must match the file.
    assert!(
        matches!(out.status.code(), Some(0) | Some(1)),
        "{}",
        stderr_of(&out)
    );
    let echoed = stdout_of(&out);
    assert!(echoed.starts_with("section,id,metric,value,lo,hi,pass,detail"));
    let file = fs::read_to_string(dir.join("out").join("summary.csv")).unwrap();
    assert_eq!(echoed, file);
}

#[test]
fn timing_goes_to_stderr_not_stdout() {
    let dir = tmp_dir("stderr-timing");
    let conf = dir.join("l1.conf");
    fs::write(
        &conf,
        "experiment = l1\nmaster_seed = 2\nexponent = 0.2\nn_values = 100000\nreplicates = 2\n",
    )
    .unwrap();
    let out = bin()
        .args([
            "exp-l1",
            "--config",
            conf.to_str().unwrap(),
            "--out",
            dir.join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let err = stderr_of(&out);
    assert!(err.contains("elapsed_ms="));
    assert!(err.contains("wrote "));
    let text = stdout_of(&out);
    assert!(!text.contains("elapsed_ms"));
    serde_json::from_str::<serde_json::Value>(&text).expect("stdout is one JSON document");
}

#[test]
fn failing_verdict_exits_1_but_still_writes() {
    let dir = tmp_dir("fail-verdict");
    let conf = dir.join("lower.conf");
    // Far-subcritical regime: the run works, the verdict flags out-of-regime.
    fs::write(
        &conf,
        "experiment = lower-bound\nmaster_seed = 5\nn = 10000\np = 0.00005\nl = 100\nroots = 200\n",
    )
    .unwrap();
    let out = bin()
        .args([
            "exp-lower",
            "--config",
            conf.to_str().unwrap(),
            "--out",
            dir.join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let summary: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(summary["all_pass"], false);
    assert!(dir.join("out").join("summary.json").exists());
}

#[test]
fn simulate_bp_and_couple_print_their_outcomes() {
    let out = bin()
        .args([
            "simulate-bp", "--n", "100", "--p", "0.005", "--seed", "3",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("status="));
    assert!(field(&text, "total_size") >= 1.0);

    let out = bin()
        .args(["couple", "--n", "500", "--p", "0.002", "--seed", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("relation=TreeSubsetBp"));
    assert!(field(&text, "tree_size") <= field(&text, "bp_total"));

    let out = bin()
        .args([
            "couple", "--n", "500", "--p", "0.002", "--seed", "3", "--k", "40",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("relation=GraphAtLeastBp") || text.contains("relation=BothAtLeastK"));

    let out = bin()
        .args([
            "explore-trunc", "--n", "2000", "--p", "0.0006", "--seed", "4", "--size-cap", "50",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("stopped_by="));
    assert!(field(&text, "reached") >= 1.0);
}
