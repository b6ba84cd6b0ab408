mod common;

use std::path::Path;

use ridepool::demand::TripRequest;
use ridepool::experiment::{run_cell, run_instance, run_sweep, NetworkSource, ResultsTable, SweepConfig};
use ridepool::metrics::{GuardLimits, RunStatus, Stage};
use ridepool::netgraph::generate_grid;

fn small_config() -> SweepConfig {
    SweepConfig {
        demand_levels: vec![30, 60],
        lambdas: vec![0.15, 0.35],
        replications: 1,
        network: NetworkSource::Grid {
            rows: 8,
            cols: 8,
            spacing: 300.0,
            speed: 10.0,
        },
        cell_time_budget: 60.0,
        ..SweepConfig::default()
    }
}

fn data_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(String::from)
        .collect()
}

#[test]
fn tiny_cell_completes() {
    let mut cfg = small_config();
    cfg.network = NetworkSource::Grid {
        rows: 5,
        cols: 5,
        spacing: 300.0,
        speed: 10.0,
    };
    let net = cfg.build_network().unwrap();
    let cell = run_cell(&cfg, &net, 10, 0.05, 0).unwrap();
    assert_eq!(cell.status, RunStatus::Completed);
    assert_eq!(cell.rides_per_degree[0], Some(10));
    assert!(cell.objective.is_some());
}

#[test]
fn identical_trips_abort_at_the_pair_stage() {
    let mut cfg = small_config();
    cfg.guard = GuardLimits {
        max_avg_degree: 20.0,
        ..GuardLimits::default()
    };
    let net = generate_grid(5, 5, 300.0, 10.0).unwrap();
    let requests: Vec<TripRequest> = (0..30).map(|id| common::request(&net, id, 0, 24, 0.0)).collect();
    let run = run_instance(&cfg, &net, requests.clone(), 30, 0.3, 0, 0).unwrap();
    let cell = run.result;
    assert!(
        matches!(&cell.status, RunStatus::Aborted { stage: Stage::Degree2, reason } if reason == "avg_degree 29 > 20")
    );
    assert_eq!(cell.rides_per_degree[1], Some(1740));
    assert_eq!(cell.rides_per_degree[2], None);
    assert!(cell.graph.is_some());
    assert!(cell.objective.is_none());
    let record = cell.to_record();
    let header = ridepool::experiment::CellResult::header();
    let col = |name: &str| record[header.iter().position(|h| h == name).unwrap()].clone();
    assert_eq!(col("deg2_retained"), "1740");
    assert_eq!(col("deg3_retained"), "");
    assert_eq!(col("objective"), "");

    cfg.guard.max_avg_degree = 40.0;
    cfg.max_degree = 2;
    let run = run_instance(&cfg, &net, requests, 30, 0.3, 0, 0).unwrap();
    assert_eq!(run.result.status, RunStatus::Completed);
}

#[test]
fn cardinality_resume_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let out = dir.path().join("results.csv");
    let summary = run_sweep(&cfg, &out, false, 1).unwrap();
    assert_eq!(summary.written, 4);
    let full = ResultsTable::load(&out).unwrap();
    assert_eq!(full.rows.len(), 4);

    // keep two rows plus a torn third, as after a kill mid-write
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let torn = format!("{}\n{}", lines[..4].join("\n"), &lines[4][..10]);
    std::fs::write(&out, torn).unwrap();
    let summary = run_sweep(&cfg, &out, true, 1).unwrap();
    assert_eq!((summary.skipped, summary.written), (2, 2));
    let resumed = ResultsTable::load(&out).unwrap();
    assert_eq!(resumed.rows.len(), 4);

    let key = |t: &ResultsTable| {
        let mut rows = t.without_timing();
        rows.sort();
        rows
    };
    assert_eq!(key(&full), key(&resumed));

    let again = dir.path().join("again.csv");
    run_sweep(&cfg, &again, false, 2).unwrap();
    assert_eq!(key(&full), key(&ResultsTable::load(&again).unwrap()));
}

#[test]
fn resume_refuses_a_foreign_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results.csv");
    std::fs::write(&out, "# schema=1\ndemand_level,lambda\n50,0.1\n").unwrap();
    let err = run_sweep(&small_config(), &out, true, 1).unwrap_err();
    assert!(err.to_string().contains("refusing"), "{err}");
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        "# schema=1\ndemand_level,lambda\n50,0.1\n"
    );
}

#[test]
fn larger_discount_never_loses_rides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results.csv");
    let mut cfg = small_config();
    cfg.replications = 2;
    run_sweep(&cfg, &out, false, 1).unwrap();
    let t = ResultsTable::load(&out).unwrap();
    for lo in &t.rows {
        if t.value(lo, "lambda") != Some(0.15) {
            continue;
        }
        let hi = t
            .rows
            .iter()
            .find(|r| t.value(r, "lambda") == Some(0.35) && t.value(r, "seed") == t.value(lo, "seed"))
            .expect("paired row");
        for col in ["rides_d2", "rides_d3", "rides_d4", "search_space"] {
            assert!(t.value(hi, col).unwrap() >= t.value(lo, col).unwrap(), "{col}");
        }
    }
    assert_eq!(data_lines(&out).len(), 8);
}

#[test]
fn config_file_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    std::fs::write(&path, "demand_levels = 10\nlambdas = 0.1, nope\n").unwrap();
    let err = SweepConfig::load(&path).unwrap_err().to_string();
    assert!(err.contains("bad.conf:2"), "{err}");
    std::fs::write(&path, "demand_level = 10\n").unwrap();
    let err = SweepConfig::load(&path).unwrap_err().to_string();
    assert!(err.contains("unknown key `demand_level`"), "{err}");
}
