//! Match travelers to rides: exact branch and bound against the greedy baseline.
//!
//! cargo run --release --example exact_matching -- 150 0.3

use std::time::Instant;

use ridepool::demand::{generate_demand, DemandConfig};
use ridepool::exmas::{enumerate_all, BehavioralParams, EnumerationOptions};
use ridepool::matching::{solve_exact, solve_greedy, MatchingProblem};
use ridepool::metrics::kpis;
use ridepool::netgraph::generate_grid;

fn main() -> ridepool::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(150);
    let lambda: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.3);

    let net = generate_grid(15, 15, 300.0, 10.0)?;
    let requests = generate_demand(&net, &DemandConfig::for_network(&net, n, 3))?;
    let mut ends: Vec<u64> = requests.iter().flat_map(|r| [r.origin, r.destination]).collect();
    ends.sort_unstable();
    ends.dedup();
    let skim = net.build_skim(&ends)?;
    let params = BehavioralParams::default().with_lambda(lambda);
    let rides = enumerate_all(&requests, &skim, &params, &EnumerationOptions::default())?.rides;

    let problem = MatchingProblem::from_rides(requests.iter().map(|r| r.id).collect(), &rides)?;
    println!(
        "{} rides, {} distinct traveler sets",
        rides.len(),
        problem.columns().len()
    );

    let clock = Instant::now();
    let greedy = solve_greedy(&problem);
    println!(
        "greedy: objective {:.4}, {} rides, {:?}",
        greedy.objective,
        greedy.selected.len(),
        clock.elapsed()
    );

    let clock = Instant::now();
    let exact = solve_exact(&problem);
    println!(
        "exact:  objective {:.4}, {} rides, {:?}",
        exact.objective,
        exact.selected.len(),
        clock.elapsed()
    );
    assert!(exact.is_partition_of(problem.requests()));

    let k = kpis(&requests, &exact, &params);
    println!(
        "pooled share {:.2}, utility gain {:.2}% of the solo baseline, mean occupancy {:.2}",
        k.share_pooled,
        100.0 * k.rel_utility_gain,
        k.mean_occupancy
    );
    Ok(())
}
