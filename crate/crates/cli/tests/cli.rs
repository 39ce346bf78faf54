use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dnch_cli::config::parse_config;
use dnch_cli::run::run;
use serde_json::Value;

fn dnch(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dnch"))
        .args(args)
        .arg("--output")
        .arg(out)
        .arg("--quiet")
        .output()
        .expect("binary runs")
}

fn with_config(text: &str, out: &Path) -> Output {
    let cfg = out.with_extension("cfg");
    fs::write(&cfg, text).unwrap();
    dnch(&["--config", cfg.to_str().unwrap()], out)
}

fn jsonl(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn stationary_solve_has_zero_rates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = dnch(&["solve", "--preset", "stationary"], &out);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let mut rows = 0;
    for line in lines {
        rows += 1;
        for (name, value) in header.iter().zip(line.split(',')) {
            if name.starts_with("w_") {
                assert!(value.parse::<f64>().unwrap().abs() <= 1e-8);
            }
        }
    }
    assert_eq!(rows, 9);
    let series = fs::read_to_string(out.join("series.csv")).unwrap();
    assert_eq!(series.lines().count(), 101);
}

#[test]
fn delta_sweep_reports_a_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = dnch(&["sweep-delta", "--preset", "logwell-sign"], &out);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let records = jsonl(&out.join("rates.jsonl"));
    assert_eq!(records[0]["record"], "header");
    assert_eq!(records.iter().filter(|r| r["record"] == "point").count(), 4);
    let summary = records.last().unwrap();
    assert_eq!(summary["record"], "summary");
    assert!(summary["slope"].as_f64().unwrap() >= 0.2);
}

#[test]
fn corrupted_trajectory_fails_diagnosis() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("diag");
    let o = with_config(
        "command = diagnose\npreset = quartic-zero\nseed = 3\n[diagnose]\ncorrupt = 0.5\n",
        &out,
    );
    assert_eq!(o.status.code(), Some(3));
    let records = jsonl(&out.join("diagnostics.jsonl"));
    assert_eq!(records[1]["pass"], false);
}

#[test]
fn clean_diagnosis_passes() {
    let dir = tempfile::tempdir().unwrap();
    for name in [
        "logwell-sign",
        "quartic-zero",
        "quartic-power",
        "stationary",
    ] {
        let out = dir.path().join(name);
        let o = dnch(&["diagnose", "--preset", name], &out);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn nan_forcing_is_a_hard_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nan");
    let o = with_config(
        "command = solve\npreset = quartic-zero\n[problem]\nforcing = const:nan\n",
        &out,
    );
    assert_eq!(o.status.code(), Some(2));
    let series = fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(series
        .lines()
        .last()
        .unwrap()
        .starts_with("# failed at step 1"));
    let records = jsonl(&out.join("run.jsonl"));
    assert_eq!(records.last().unwrap()["record"], "failure");
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad");
    let o = with_config(
        "command = solve\npreset = quartic-zero\n[problem]\nepsilonn = 1\n",
        &out,
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));

    let o = with_config(
        "command = solve\npreset = quartic-zero\n[problem]\nepsilon = 0\ndelta = 0\n",
        &out,
    );
    assert_eq!(o.status.code(), Some(1));

    assert_eq!(
        dnch(&["solve", "--preset", "nope"], &out).status.code(),
        Some(1)
    );
    assert_eq!(dnch(&["solve"], &out).status.code(), Some(1));
    assert_eq!(
        dnch(&["--emit", "xml", "solve"], &out).status.code(),
        Some(1)
    );
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flags");
    let o = with_config(
        "command = diagnose\npreset = quartic-zero\nemit = jsonl\n",
        &out,
    );
    assert_eq!(o.status.code(), Some(0));
    let cfg = out.with_extension("cfg");
    let o = dnch(
        &[
            "check-graphs",
            "--config",
            cfg.to_str().unwrap(),
            "--emit",
            "csv",
            "--seed",
            "5",
        ],
        &out,
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("graphs.csv").exists());
    assert!(!out.join("graphs.jsonl").exists());
    let header = fs::read_to_string(out.join("header.txt")).unwrap();
    assert!(header.contains("command = check-graphs") && header.contains("seed = 5"));
}

#[test]
fn header_echoes_the_physical_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let text = "command = solve\npreset = logwell-sign\n[problem]\ndelta = 0.5\ncells = 32\n";
    let mut cfg = parse_config(text).unwrap();
    cfg.output = dir.path().join("h");
    cfg.quiet = true;
    run(&cfg).unwrap();
    let header = fs::read_to_string(cfg.output.join("header.txt")).unwrap();
    for line in [
        "delta = 0.5",
        "cells = 32",
        "graph = sign",
        "potential = log:1:2:2",
        "lambda = 1e-5",
        "tau = 0.001",
    ] {
        assert!(
            header.lines().any(|l| l == line),
            "missing {line:?} in\n{header}"
        );
    }
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = dnch(
            &[
                "probe-dependence",
                "--preset",
                "quartic-zero",
                "--seed",
                "11",
            ],
            out,
        );
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["probe.csv", "probe.jsonl", "header.txt"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}
