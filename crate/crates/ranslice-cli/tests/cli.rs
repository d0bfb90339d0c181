//! End-to-end tests of the `ranslice` binary: output schemas, reproducible
//! files, and the documented exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ranslice(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ranslice"))
        .args(args)
        .current_dir(dir)
        .env_remove("RANSLICE_OUT")
        .output()
        .expect("binary runs")
}

#[test]
fn fig2_prints_the_walkthrough_matching() {
    let dir = tempfile::tempdir().unwrap();
    let out = ranslice(&["fig2"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("user3 -> mvno1"));
    assert!(stdout.contains("user2 -> mvno2"));
    assert!(stdout.contains("user1 rejected"));
    assert!(stdout.contains("surplus: 250.000"));
    assert!(stdout.contains("charge user3: 135.000"));
    assert!(stdout.contains("charge user2: 135.000"));
}

#[test]
fn run_emits_schema_conformant_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = ranslice(
        &["run", "--seed", "4", "--timeslots", "6", "--out", "files"],
        dir.path(),
    );
    assert!(out.status.success(), "{:?}", out);

    let per_slot = fs::read_to_string(dir.path().join("files/per_slot.csv")).unwrap();
    let mut lines = per_slot.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("t,mno_revenue,mno_cost,mno_profit,"));
    assert_eq!(lines.count(), 6, "one data row per timeslot");

    let summary = fs::read_to_string(dir.path().join("files/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2, "header plus one row");

    // The summary row round-trips: profit equals revenue minus cost at
    // rendered precision.
    let header: Vec<&str> = summary.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    let field = |name: &str| -> f64 {
        let i = header.iter().position(|h| *h == name).unwrap();
        row[i].parse().unwrap()
    };
    let (rev, cost, profit) = (field("mno_revenue"), field("mno_cost"), field("mno_profit"));
    assert!((rev - cost - profit).abs() < 1e-2);
}

#[test]
fn zero_request_run_emits_header_only_per_slot_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"
schema_version = 1
[request_gen]
per_slot = 0
traffic_gbps = { lo = 0.5, hi = 5.0 }
unit_price = { lo = 10.0, hi = 30.0 }
duration = "static"
dynamic_duration = { lo = 1, hi = 5 }
type_mix = [["eMBB", 0.5], ["uRLLC", 0.5]]
"#;
    fs::write(dir.path().join("zero.toml"), config).unwrap();
    let out = ranslice(
        &["run", "--config", "zero.toml", "--timeslots", "0", "--out", "files"],
        dir.path(),
    );
    assert!(out.status.success());
    let per_slot = fs::read_to_string(dir.path().join("files/per_slot.csv")).unwrap();
    assert_eq!(per_slot.lines().count(), 1, "header only");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["a", "b"] {
        let out = ranslice(&["run", "--seed", "11", "--out", sub], dir.path());
        assert!(out.status.success());
    }
    for file in ["per_slot.csv", "summary.csv"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn compare_emits_seed_mean_and_delta_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = ranslice(
        &[
            "compare",
            "--baseline",
            "1",
            "--seeds",
            "2",
            "--resale-profile",
            "R1",
            "--out",
            "cmp",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{:?}", out);
    let csv = fs::read_to_string(dir.path().join("cmp/compare.csv")).unwrap();
    let count = |kind: &str| csv.lines().filter(|l| l.starts_with(kind)).count();
    assert_eq!(count("seed,"), 4); // 2 algorithms x 2 seeds
    assert_eq!(count("mean,"), 2);
    assert_eq!(count("delta_pct,"), 1);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("R1 vs baseline1"));
}

#[test]
fn run_can_execute_a_baseline_policy() {
    let dir = tempfile::tempdir().unwrap();
    let out = ranslice(
        &["run", "--seed", "2", "--baseline", "2", "--out", "files"],
        dir.path(),
    );
    assert!(out.status.success());
    let summary = fs::read_to_string(dir.path().join("files/summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().contains("baseline2"));
}

#[test]
fn env_var_sets_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ranslice"))
        .args(["run", "--seed", "3"])
        .current_dir(dir.path())
        .env("RANSLICE_OUT", "enved")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("enved/summary.csv").exists());
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    let dir = tempfile::tempdir().unwrap();

    // Unknown flag: clap usage error.
    let out = ranslice(&["run", "--no-such-flag"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    // Malformed config.
    fs::write(dir.path().join("bad.toml"), "schema_version = \"x\"").unwrap();
    let out = ranslice(&["run", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(3));

    // Unsupported schema version is also a config error.
    fs::write(dir.path().join("v9.toml"), "schema_version = 9").unwrap();
    let out = ranslice(&["run", "--config", "v9.toml"], dir.path());
    assert_eq!(out.status.code(), Some(3));

    // Oracle limits exceeded.
    let out = ranslice(
        &["oracle-check", "--trials", "1", "--requests", "40"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(5));

    // Missing config file is an io error.
    let out = ranslice(&["run", "--config", "nothere.toml"], dir.path());
    assert_eq!(out.status.code(), Some(6));
}

#[test]
fn oracle_check_passes_on_default_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ranslice(&["oracle-check", "--trials", "25", "--seed", "3"], dir.path());
    assert!(out.status.success(), "{:?}", out);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("all oracle checks passed"));
    assert!(stdout.contains("optimality gap"));
}
