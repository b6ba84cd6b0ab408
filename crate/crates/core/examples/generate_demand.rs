//! Draw a batch of trip requests concentrated around the network center.
//!
//! cargo run --example generate_demand -- 200 7

use ridepool::demand::{generate_demand, write_demand_to, DemandConfig};
use ridepool::netgraph::generate_grid;

fn main() -> ridepool::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(200);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);

    let net = generate_grid(15, 15, 300.0, 10.0)?;
    let cfg = DemandConfig::for_network(&net, n, seed);
    let requests = generate_demand(&net, &cfg)?;

    let mean_origin_dist = requests
        .iter()
        .map(|r| net.distance_to_center(r.origin).unwrap_or(0.0))
        .sum::<f64>()
        / n as f64;
    let mean_trip = requests.iter().map(|r| r.length_km).sum::<f64>() / n as f64;
    println!(
        "{n} requests over {:.0} s; mean origin distance to center {:.0} m (tau {:.0} m); mean trip {:.2} km",
        cfg.batch_length, mean_origin_dist, cfg.tau_origin, mean_trip
    );

    println!("first rows:");
    let mut buf = Vec::new();
    write_demand_to(&mut buf, &requests[..5.min(requests.len())])?;
    print!("{}", String::from_utf8_lossy(&buf));
    Ok(())
}
