//! A small demand × discount sweep written to CSV, interrupted and resumed.
//!
//! cargo run --release --example sweep

use ridepool::experiment::{run_sweep, NetworkSource, SweepConfig};

fn main() -> ridepool::Result<()> {
    let cfg = SweepConfig {
        demand_levels: vec![40, 80],
        lambdas: vec![0.15, 0.3],
        replications: 2,
        network: NetworkSource::Grid {
            rows: 10,
            cols: 10,
            spacing: 300.0,
            speed: 10.0,
        },
        cell_time_budget: 30.0,
        ..SweepConfig::default()
    };
    let out = std::env::temp_dir().join("ridepool-sweep-example.csv");

    let first = run_sweep(&cfg, &out, false, 1)?;
    println!("fresh run: {} rows", first.written);

    // drop the last two rows, as if the process had been killed
    let text = std::fs::read_to_string(&out).map_err(|e| ridepool::Error::io(&out, e))?;
    let kept: Vec<&str> = text.lines().collect();
    let truncated = kept[..kept.len() - 2].join("\n") + "\n";
    std::fs::write(&out, truncated).map_err(|e| ridepool::Error::io(&out, e))?;

    let resumed = run_sweep(&cfg, &out, true, 1)?;
    println!(
        "resumed: {} skipped, {} written -> {}",
        resumed.skipped,
        resumed.written,
        out.display()
    );
    Ok(())
}
