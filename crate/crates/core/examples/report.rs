//! Turn a results CSV into per-figure data files and a text summary.
//!
//! cargo run --release --example report -- results.csv out_dir
//! (without arguments a small sweep is run first)

use std::path::PathBuf;

use ridepool::experiment::{report, run_sweep, NetworkSource, SweepConfig};

fn main() -> ridepool::Result<()> {
    let mut args = std::env::args().skip(1);
    let tmp = std::env::temp_dir();
    let results = match args.next() {
        Some(path) => PathBuf::from(path),
        None => {
            let path = tmp.join("ridepool-report-example.csv");
            let cfg = SweepConfig {
                demand_levels: vec![50, 100],
                lambdas: vec![0.15, 0.25, 0.35],
                replications: 3,
                network: NetworkSource::Grid {
                    rows: 12,
                    cols: 12,
                    spacing: 300.0,
                    speed: 10.0,
                },
                ..SweepConfig::default()
            };
            run_sweep(&cfg, &path, false, 1)?;
            path
        }
    };
    let out_dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| tmp.join("ridepool-figures"));
    print!("{}", report(&results, &out_dir)?);
    println!("figure data in {}", out_dir.display());
    Ok(())
}
