//! Helpers shared by the integration tests: seeded instance builders and
//! exhaustive reference implementations written independently of the
//! library's search code.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ridepool::demand::{RequestId, TripRequest};
use ridepool::exmas::{BehavioralParams, Ride, RideEvaluation, RideSet, StopSequence, TravelerOutcome};
use ridepool::matching::{Column, MatchingProblem};
use ridepool::netgraph::{generate_grid, Network, NodeId, SkimMatrix};

pub type RideKey = (Vec<RequestId>, Option<StopSequence>);

/// A ride found by exhaustive enumeration.
#[derive(Clone, Debug)]
pub struct OracleRide {
    pub departure: f64,
    /// (shared_time, delay, delta_u) per traveler in id order
    pub outcomes: Vec<(f64, f64, f64)>,
}

impl OracleRide {
    pub fn total_gain(&self) -> f64 {
        self.outcomes.iter().map(|o| o.2).sum()
    }
}

pub fn params(lambda: f64) -> BehavioralParams {
    BehavioralParams {
        beta_c: 1.0,
        beta_t: 0.005,
        beta_s: 1.2,
        beta_d: 1.0,
        lambda,
    }
}

pub fn request(net: &Network, id: RequestId, origin: NodeId, destination: NodeId, request_time: f64) -> TripRequest {
    let path = net.shortest_path(origin, destination).expect("connected grid");
    TripRequest {
        id,
        origin,
        destination,
        request_time,
        direct_time: path.time,
        length_km: path.length / 1000.0,
    }
}

pub fn skim_for(net: &Network, requests: &[TripRequest]) -> SkimMatrix {
    let mut ends: Vec<NodeId> = requests.iter().flat_map(|r| [r.origin, r.destination]).collect();
    ends.sort_unstable();
    ends.dedup();
    net.build_skim(&ends).expect("endpoints exist")
}

/// Small random instance on a 5×5 grid: 2..=max_n requests issued within
/// four minutes (90 s when clustered) and a discount in [0.05, 0.45]. Odd seeds draw origins from
/// the top-left 2×2 corner and destinations from the bottom-right 3×3 block
/// so that larger rides show up.
pub fn oracle_instance(seed: u64, max_n: usize) -> (Network, Vec<TripRequest>, BehavioralParams) {
    let net = generate_grid(5, 5, 300.0, 10.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_n);
    let clustered = seed % 2 == 1;
    let requests = (0..n as u64)
        .map(|id| {
            let (origin, destination) = if clustered {
                let o = rng.gen_range(0..2) * 5 + rng.gen_range(0..2);
                let d = rng.gen_range(2..5) * 5 + rng.gen_range(2..5);
                (o, d)
            } else {
                let o = rng.gen_range(0..25);
                let mut d = rng.gen_range(0..25);
                while d == o {
                    d = rng.gen_range(0..25);
                }
                (o, d)
            };
            let window: f64 = if clustered { 90.0 } else { 240.0 };
            let t = (rng.gen_range(0.0..window) * 10.0).round() / 10.0;
            request(&net, id, origin, destination, t)
        })
        .collect();
    let lambda = 0.05 + 0.4 * rng.gen::<f64>();
    (net, requests, params(lambda))
}

fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|&i| m & (1 << i) != 0).collect())
        .collect()
}

/// Every traveler subset up to `max_degree`, every pickups-before-dropoffs
/// order, kept when each traveler gains. Legs come straight from Dijkstra.
pub fn oracle_rides(
    net: &Network,
    requests: &[TripRequest],
    p: &BehavioralParams,
    max_degree: usize,
) -> BTreeMap<RideKey, OracleRide> {
    let mut sorted = requests.to_vec();
    sorted.sort_by_key(|r| r.id);
    let legs = std::cell::RefCell::new(BTreeMap::new());
    let leg = |a: NodeId, b: NodeId| {
        *legs
            .borrow_mut()
            .entry((a, b))
            .or_insert_with(|| net.shortest_travel_time(a, b).unwrap())
    };
    let mut out = BTreeMap::new();
    for r in &sorted {
        out.insert(
            (vec![r.id], None),
            OracleRide {
                departure: r.request_time,
                outcomes: vec![(r.direct_time, 0.0, 0.0)],
            },
        );
    }
    for k in 2..=max_degree.min(sorted.len()) {
        for subset in subsets_of_size(sorted.len(), k) {
            let members: Vec<&TripRequest> = subset.iter().map(|&i| &sorted[i]).collect();
            let ids: Vec<RequestId> = members.iter().map(|r| r.id).collect();
            for pickups in permutations(&ids) {
                for dropoffs in permutations(&ids) {
                    let at = |id: RequestId| members.iter().position(|r| r.id == id).unwrap();
                    let mut pick = vec![0.0; k];
                    let mut drop = vec![0.0; k];
                    let mut clock = 0.0;
                    let mut here = members[at(pickups[0])].origin;
                    for &id in &pickups {
                        let node = members[at(id)].origin;
                        clock += leg(here, node);
                        here = node;
                        pick[at(id)] = clock;
                    }
                    for &id in &dropoffs {
                        let node = members[at(id)].destination;
                        clock += leg(here, node);
                        here = node;
                        drop[at(id)] = clock;
                    }
                    let departure = (0..k)
                        .map(|i| members[i].request_time - pick[i])
                        .fold(f64::NEG_INFINITY, f64::max);
                    let outcomes: Vec<(f64, f64, f64)> = (0..k)
                        .map(|i| {
                            let r = members[i];
                            let shared = drop[i] - pick[i];
                            let delay = (departure + pick[i] - r.request_time).max(0.0);
                            let gain = p.beta_c * p.lambda * r.length_km
                                + p.beta_t * (r.direct_time - p.beta_s * (shared + p.beta_d * delay));
                            (shared, delay, gain)
                        })
                        .collect();
                    if outcomes.iter().all(|o| o.2 > 0.0) {
                        out.insert(
                            (
                                ids.clone(),
                                Some(StopSequence {
                                    pickups: pickups.clone(),
                                    dropoffs,
                                }),
                            ),
                            OracleRide { departure, outcomes },
                        );
                    }
                }
            }
        }
    }
    out
}

/// Oracle rides packaged as a `RideSet`, ids assigned in canonical order.
pub fn oracle_ride_set(rides: &BTreeMap<RideKey, OracleRide>) -> RideSet {
    RideSet::from_unsorted(
        rides
            .iter()
            .map(|((travelers, sequence), r)| Ride {
                id: 0,
                travelers: travelers.clone(),
                sequence: sequence.clone(),
                evaluation: RideEvaluation {
                    departure: r.departure,
                    travelers: travelers
                        .iter()
                        .zip(&r.outcomes)
                        .map(|(&request, &(shared_time, delay, delta_u))| TravelerOutcome {
                            request,
                            shared_time,
                            delay,
                            delta_u,
                        })
                        .collect(),
                },
                total_gain: r.total_gain(),
            })
            .collect(),
    )
}

/// Random set-partitioning instance: solos plus random 2..=4-traveler
/// columns with gains on a coarse grid so ties happen.
pub fn random_problem(seed: u64, max_n: usize) -> MatchingProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_n);
    let requests: Vec<RequestId> = (0..n as u64).collect();
    let mut columns: Vec<Column> = requests
        .iter()
        .map(|&r| Column {
            ride_id: r as usize,
            travelers: vec![r],
            delta_u: vec![0.0],
            gain: 0.0,
        })
        .collect();
    let extra = rng.gen_range(0..=3 * n);
    for _ in 0..extra {
        let k = rng.gen_range(2..=4.min(n).max(2));
        if k > n {
            break;
        }
        let mut travelers: Vec<RequestId> = Vec::new();
        while travelers.len() < k {
            let t = rng.gen_range(0..n as u64);
            if !travelers.contains(&t) {
                travelers.push(t);
            }
        }
        travelers.sort_unstable();
        if columns.iter().any(|c| c.travelers == travelers) {
            continue;
        }
        let delta_u: Vec<f64> = (0..k).map(|_| rng.gen_range(1..=8) as f64 * 0.05).collect();
        let gain = delta_u.iter().sum();
        columns.push(Column {
            ride_id: columns.len(),
            travelers,
            delta_u,
            gain,
        });
    }
    MatchingProblem::new(requests, columns).unwrap()
}

/// Exhaustive search over all partitions; returns the best objective and
/// the ascending selected ride ids under the documented tie rule.
pub fn exhaustive_partition(prob: &MatchingProblem) -> (f64, Vec<usize>) {
    fn go(
        prob: &MatchingProblem,
        uncovered: &mut Vec<RequestId>,
        picked: &mut Vec<usize>,
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        let Some(&first) = uncovered.first() else {
            let mut ids: Vec<usize> = picked.iter().map(|&c| prob.columns()[c].ride_id).collect();
            ids.sort_unstable();
            let obj: f64 = {
                let mut cols: Vec<&Column> = picked.iter().map(|&c| &prob.columns()[c]).collect();
                cols.sort_by_key(|c| c.ride_id);
                cols.iter().map(|c| c.gain).sum()
            };
            let replace = match best {
                None => true,
                Some((b, bids)) => {
                    obj > *b + 1e-9 || ((obj - *b).abs() <= 1e-9 && (ids.len(), &ids) < (bids.len(), bids))
                }
            };
            if replace {
                *best = Some((obj, ids));
            }
            return;
        };
        for c in 0..prob.columns().len() {
            let col = &prob.columns()[c];
            if col.travelers.contains(&first) && col.travelers.iter().all(|t| uncovered.contains(t)) {
                let saved = uncovered.clone();
                uncovered.retain(|t| !col.travelers.contains(t));
                picked.push(c);
                go(prob, uncovered, picked, best);
                picked.pop();
                *uncovered = saved;
            }
        }
    }
    let mut best = None;
    go(prob, &mut prob.requests().to_vec(), &mut Vec::new(), &mut best);
    best.expect("solos make the instance feasible")
}

pub fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}
