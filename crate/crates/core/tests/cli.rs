mod common;

use std::path::Path;
use std::process::{Command, Output};

fn ridepool(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ridepool"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn theory_prints_the_exact_table() {
    let out = ridepool(&["theory", "--q-list", "2,4", "--d-list", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "q,d,exact,log10\n2,2,4,0.602\n4,2,24,1.380\n"
    );
}

#[test]
fn solve_reproduces_the_fixture_rides() {
    let fixture = common::fixture_dir().join("oracle6");
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = ridepool(&[
        "solve",
        "--net",
        s(&fixture),
        "--demand",
        s(&fixture.join("demand.csv")),
        "--lambda",
        "0.3",
        "--params-file",
        s(&fixture.join("params.conf")),
        "--out-dir",
        s(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("status=completed"));
    assert_eq!(
        std::fs::read_to_string(out_dir.join("rides.csv")).unwrap(),
        std::fs::read_to_string(fixture.join("rides.csv")).unwrap()
    );
    assert!(out_dir.join("solution.csv").exists());
    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("stage,"));
}

#[test]
fn grid_demand_solve_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net");
    let demand = dir.path().join("demand.csv");
    let grid = ridepool(&[
        "net",
        "grid",
        "--rows",
        "6",
        "--cols",
        "6",
        "--spacing",
        "300",
        "--speed",
        "10",
        "--out",
        s(&net),
    ]);
    assert_eq!(grid.status.code(), Some(0));
    assert_eq!(String::from_utf8(grid.stdout).unwrap(), "nodes=36 edges=120\n");
    let gen = ridepool(&[
        "demand",
        "gen",
        "--net",
        s(&net),
        "--n",
        "25",
        "--seed",
        "4",
        "--out",
        s(&demand),
    ]);
    assert_eq!(gen.status.code(), Some(0), "{}", String::from_utf8_lossy(&gen.stderr));
    let solve = ridepool(&[
        "solve",
        "--net",
        s(&net),
        "--demand",
        s(&demand),
        "--lambda",
        "0.3",
        "--out-dir",
        s(&dir.path().join("out")),
    ]);
    assert_eq!(
        solve.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&solve.stderr)
    );
}

#[test]
fn demo_sweep_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/demo.conf");
    let results = dir.path().join("results.csv");
    let out = ridepool(&["sweep", "--config", s(&config), "--out", s(&results)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = ridepool::experiment::ResultsTable::load(&results).unwrap();
    assert_eq!(table.rows.len(), 4);

    let again = ridepool(&["sweep", "--config", s(&config), "--out", s(&results), "--resume"]);
    assert!(String::from_utf8(again.stdout)
        .unwrap()
        .starts_with("written=0 skipped=4"));

    let figs = dir.path().join("figs");
    let rep = ridepool(&["report", "--results", s(&results), "--out-dir", s(&figs)]);
    assert_eq!(rep.status.code(), Some(0));
    assert!(figs.join("fig3a_search_space.csv").exists());
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(ridepool(&["theory"]).status.code(), Some(2));
    assert_eq!(ridepool(&["frobnicate"]).status.code(), Some(2));
    let fixture = common::fixture_dir().join("oracle6");
    let dir = tempfile::tempdir().unwrap();
    let out = ridepool(&[
        "solve",
        "--net",
        s(&fixture),
        "--demand",
        s(&fixture.join("demand.csv")),
        "--lambda",
        "1.5",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("lambda"));
    let conf = dir.path().join("bad.conf");
    std::fs::write(&conf, "demand_levels = 10\nlambdas = x\n").unwrap();
    let out = ridepool(&["sweep", "--config", s(&conf), "--out", s(&dir.path().join("r.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(ridepool(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_file_exits_with_one() {
    let out = ridepool(&[
        "report",
        "--results",
        "/nonexistent/results.csv",
        "--out-dir",
        "/tmp/never",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn guard_abort_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let net_dir = dir.path().join("net");
    ridepool(&[
        "net",
        "grid",
        "--rows",
        "4",
        "--cols",
        "4",
        "--spacing",
        "300",
        "--speed",
        "10",
        "--out",
        s(&net_dir),
    ]);
    let net = ridepool::netgraph::load_network(&net_dir.join("nodes.csv"), &net_dir.join("edges.csv")).unwrap();
    let requests: Vec<_> = (0..30).map(|id| common::request(&net, id, 0, 15, id as f64)).collect();
    let demand = dir.path().join("demand.csv");
    ridepool::demand::write_demand(&demand, &requests).unwrap();
    let out_dir = dir.path().join("out");
    let out = ridepool(&[
        "solve",
        "--net",
        s(&net_dir),
        "--demand",
        s(&demand),
        "--lambda",
        "0.3",
        "--out-dir",
        s(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("rides_retained 1000512 > 1000000 at degree 4"),
        "{stdout}"
    );
    assert!(out_dir.join("rides.csv").exists() && out_dir.join("trace.csv").exists());
    assert!(!out_dir.join("solution.csv").exists());
}
