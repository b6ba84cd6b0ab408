//! Build a lattice network, query shortest paths and round-trip it through CSV.
//!
//! cargo run --example grid_network

use ridepool::netgraph::{generate_grid, load_network, save_network};

fn main() -> ridepool::Result<()> {
    let net = generate_grid(6, 6, 250.0, 10.0)?;
    println!(
        "{} nodes, {} directed edges, radius {:.0} m",
        net.nodes().len(),
        net.edges().len(),
        net.radius()
    );

    // corner to corner: 10 hops of 250 m at 10 m/s
    let path = net.shortest_path(0, 35)?;
    println!("0 -> 35: {:.0} s over {:.2} km", path.time, path.length / 1000.0);

    let skim = net.build_skim(&[0, 7, 14, 35])?;
    for &a in skim.node_ids() {
        let row: Vec<String> = skim
            .node_ids()
            .iter()
            .map(|&b| format!("{:>5.0}", skim.get(a, b).unwrap_or(f64::NAN)))
            .collect();
        println!("{a:>3} | {}", row.join(" "));
    }

    let dir = std::env::temp_dir().join("ridepool-grid-example");
    std::fs::create_dir_all(&dir).map_err(|e| ridepool::Error::io(&dir, e))?;
    let (nodes, edges) = (dir.join("nodes.csv"), dir.join("edges.csv"));
    save_network(&net, &nodes, &edges)?;
    let again = load_network(&nodes, &edges)?;
    assert_eq!(again.shortest_travel_time(0, 35)?, path.time);
    println!("reloaded from {}", dir.display());
    Ok(())
}
