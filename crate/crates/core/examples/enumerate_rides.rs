//! Enumerate attractive pooled rides degree by degree and print the trace.
//!
//! cargo run --release --example enumerate_rides -- 150 0.3

use ridepool::demand::{generate_demand, DemandConfig};
use ridepool::exmas::{enumerate_all, BehavioralParams, EnumerationOptions};
use ridepool::metrics::graph_stats;
use ridepool::netgraph::generate_grid;

fn main() -> ridepool::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(150);
    let lambda: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.3);

    let net = generate_grid(15, 15, 300.0, 10.0)?;
    let requests = generate_demand(&net, &DemandConfig::for_network(&net, n, 11))?;
    let mut ends: Vec<u64> = requests.iter().flat_map(|r| [r.origin, r.destination]).collect();
    ends.sort_unstable();
    ends.dedup();
    let skim = net.build_skim(&ends)?;

    let params = BehavioralParams::default().with_lambda(lambda);
    let run = enumerate_all(&requests, &skim, &params, &EnumerationOptions::default())?;

    println!("stage     candidates    pruned  retained   ms");
    for (stage, s) in run.trace.stages() {
        if s.reached {
            println!(
                "{:<8} {:>11} {:>9} {:>9} {:>6.1}",
                stage.name(),
                s.candidates_explored,
                s.pruned,
                s.rides_retained,
                s.elapsed_ms
            );
        }
    }
    let g = graph_stats(&run.graph);
    println!(
        "shareability graph: {} edges, avg degree {:.2}, {} components",
        g.edge_count, g.avg_degree, g.component_count
    );
    if let Some(best) = run
        .rides
        .iter()
        .filter(|r| r.degree() > 1)
        .max_by(|a, b| a.total_gain.total_cmp(&b.total_gain))
    {
        let seq = best.sequence.as_ref().expect("pooled ride");
        println!(
            "best pooled ride: travelers {:?}, pickups {:?}, dropoffs {:?}, gain {:.3}",
            best.travelers, seq.pickups, seq.dropoffs, best.total_gain
        );
    }
    Ok(())
}
