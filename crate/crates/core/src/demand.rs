//! Seeded synthetic trip requests for one batch window.
//!
//! Origins and destinations are drawn from network nodes with weight
//! `exp(-distance_to_center / tau)`, using a wide kernel for origins and a
//! narrow one for destinations, so trips flow from the whole area towards
//! the center.

use std::collections::{hash_map::Entry, HashMap};
use std::io::Write;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgraph::{Network, NodeId, PathCost};

pub type RequestId = u64;

pub const DEFAULT_BATCH_LENGTH: f64 = 600.0;
const MAX_DRAWS_PER_REQUEST: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripRequest {
    pub id: RequestId,
    pub origin: NodeId,
    pub destination: NodeId,
    /// seconds from batch start
    #[serde(rename = "request_time_s")]
    pub request_time: f64,
    /// shortest-path time, seconds
    #[serde(rename = "direct_time_s")]
    pub direct_time: f64,
    #[serde(rename = "length_km")]
    pub length_km: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemandConfig {
    pub n: usize,
    pub batch_length: f64,
    /// meters
    pub tau_origin: f64,
    /// meters
    pub tau_dest: f64,
    pub seed: u64,
}

impl DemandConfig {
    /// Defaults: `tau_origin` = network radius, `tau_dest` = radius / 10.
    pub fn for_network(net: &Network, n: usize, seed: u64) -> Self {
        let radius = net.radius().max(1.0);
        DemandConfig {
            n,
            batch_length: DEFAULT_BATCH_LENGTH,
            tau_origin: radius,
            tau_dest: radius / 10.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n", "at least one request is required"));
        }
        if !(self.batch_length > 0.0 && self.batch_length.is_finite()) {
            return Err(Error::config("batch_length", "must be positive"));
        }
        if !(self.tau_origin > 0.0 && self.tau_dest > 0.0) {
            return Err(Error::config("tau", "kernel scales must be positive"));
        }
        Ok(())
    }
}

fn kernel_weights(net: &Network, tau: f64) -> Vec<f64> {
    net.nodes()
        .iter()
        .map(|n| (-net.distance_to_center(n.id).unwrap_or(0.0) / tau).exp())
        .collect()
}

fn weighted(net: &Network, tau: f64) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(kernel_weights(net, tau))
        .map_err(|e| Error::config("tau", format!("cannot build sampling weights: {e}")))
}

/// Draws `cfg.n` requests. Deterministic for a given network and config.
pub fn generate_demand(net: &Network, cfg: &DemandConfig) -> Result<Vec<TripRequest>> {
    cfg.validate()?;
    if net.nodes().len() < 2 {
        return Err(Error::InvalidNetwork("need at least two nodes".into()));
    }
    let origin_dist = weighted(net, cfg.tau_origin)?;
    let dest_dist = weighted(net, cfg.tau_dest)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trees: HashMap<NodeId, Vec<Option<PathCost>>> = HashMap::new();
    let position: HashMap<NodeId, usize> = net.nodes().iter().enumerate().map(|(i, n)| (n.id, i)).collect();

    let mut requests = Vec::with_capacity(cfg.n);
    for id in 0..cfg.n as RequestId {
        let mut drawn = None;
        for _ in 0..MAX_DRAWS_PER_REQUEST {
            let origin = net.nodes()[origin_dist.sample(&mut rng)].id;
            let destination = net.nodes()[dest_dist.sample(&mut rng)].id;
            if origin == destination {
                continue;
            }
            if let Entry::Vacant(e) = trees.entry(origin) {
                e.insert(net.shortest_paths_from(origin)?);
            }
            if let Some(cost) = trees[&origin][position[&destination]] {
                drawn = Some((origin, destination, cost));
                break;
            }
        }
        let (origin, destination, cost) = drawn.ok_or(Error::RetryBudgetExhausted(MAX_DRAWS_PER_REQUEST))?;
        let request_time = rng.gen_range(0.0..cfg.batch_length);
        requests.push(TripRequest {
            id,
            origin,
            destination,
            request_time,
            direct_time: cost.time,
            length_km: cost.length / 1000.0,
        });
    }
    Ok(requests)
}

pub const DEMAND_HEADER: [&str; 6] = [
    "id",
    "origin",
    "destination",
    "request_time_s",
    "direct_time_s",
    "length_km",
];

pub fn write_demand_to<W: Write>(out: W, requests: &[TripRequest]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    writer
        .write_record(DEMAND_HEADER)
        .map_err(|e| Error::from_csv("demand", e))?;
    for r in requests {
        writer.serialize(r).map_err(|e| Error::from_csv("demand", e))?;
    }
    writer.flush().map_err(|e| Error::io("demand", e))
}

pub fn write_demand(path: &Path, requests: &[TripRequest]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_demand_to(std::io::BufWriter::new(file), requests)
}

pub fn read_demand(path: &Path) -> Result<Vec<TripRequest>> {
    let name = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = reader.headers().map_err(|e| Error::from_csv(&name, e))?;
    if header.iter().ne(DEMAND_HEADER.iter().copied()) {
        return Err(Error::malformed(
            &name,
            1,
            format!("expected header `{}`", DEMAND_HEADER.join(",")),
        ));
    }
    reader
        .deserialize()
        .map(|row| row.map_err(|e| Error::from_csv(&name, e)))
        .collect()
}
