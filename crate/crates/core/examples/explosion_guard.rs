//! Identical requests make every pair shareable; the guard stops the run
//! after the pairwise stage and keeps the partial trace.
//!
//! cargo run --example explosion_guard

use ridepool::demand::TripRequest;
use ridepool::exmas::{enumerate_all, BehavioralParams, EnumerationOptions};
use ridepool::metrics::{GuardLimits, Stage};
use ridepool::netgraph::generate_grid;

fn main() -> ridepool::Result<()> {
    let net = generate_grid(5, 5, 300.0, 10.0)?;
    let skim = net.build_skim(&[0, 24])?;
    let trip = skim.travel_time(0, 24)?;
    let requests: Vec<TripRequest> = (0..30)
        .map(|id| TripRequest {
            id,
            origin: 0,
            destination: 24,
            request_time: 0.0,
            direct_time: trip,
            length_km: 2.4,
        })
        .collect();
    let params = BehavioralParams::default().with_lambda(0.3);

    for limit in [20.0, 40.0] {
        let opts = EnumerationOptions {
            guard: Some(GuardLimits {
                max_avg_degree: limit,
                ..GuardLimits::default()
            }),
            max_degree: 2,
            ..EnumerationOptions::default()
        };
        let run = enumerate_all(&requests, &skim, &params, &opts)?;
        let pairs = run.trace.stage(Stage::Degree2);
        let status = &run.trace.status;
        let shown = if status.is_completed() {
            status.label().to_string()
        } else {
            status.detail()
        };
        println!(
            "max_avg_degree {limit}: {shown} ({} pairs retained)",
            pairs.rides_retained
        );
    }
    Ok(())
}
