mod common;

use common::{oracle_instance, oracle_ride_set, oracle_rides, params, request, skim_for, RideKey};
use proptest::prelude::*;
use ridepool::exmas::{enumerate_all, max_shared_time_bound, write_rides_to, EnumerationOptions, RideSet};
use ridepool::netgraph::generate_grid;

fn enumerate(seed: u64, pruning: bool) -> (RideSet, std::collections::BTreeMap<RideKey, common::OracleRide>) {
    let (net, requests, p) = oracle_instance(seed, 6);
    let skim = skim_for(&net, &requests);
    let opts = EnumerationOptions {
        pruning,
        ..EnumerationOptions::default()
    };
    let rides = enumerate_all(&requests, &skim, &p, &opts).unwrap().rides;
    (rides, oracle_rides(&net, &requests, &p, 4))
}

#[test]
fn matches_brute_force_on_seeded_instances() {
    let mut pooled = [0usize; 5];
    for seed in 0..60 {
        let (rides, oracle) = enumerate(seed, true);
        let keys: Vec<RideKey> = oracle.keys().cloned().collect();
        assert_eq!(rides.keys().into_iter().collect::<Vec<_>>(), keys, "seed {seed}");
        for ride in rides.iter() {
            let o = &oracle[&(ride.travelers.clone(), ride.sequence.clone())];
            assert_eq!(ride.total_gain, o.total_gain(), "seed {seed}");
            assert_eq!(ride.evaluation.departure, o.departure, "seed {seed}");
            pooled[ride.degree()] += 1;
        }
    }
    // the suite has to reach beyond pairs to mean anything
    assert!(pooled[3] > 0 && pooled[4] > 0, "{pooled:?}");
}

#[test]
fn degree_three_sets_match_all_36_sequences() {
    let net = generate_grid(4, 4, 300.0, 10.0).unwrap();
    let requests = vec![
        request(&net, 0, 0, 15, 0.0),
        request(&net, 1, 1, 15, 10.0),
        request(&net, 2, 4, 11, 20.0),
        request(&net, 3, 5, 14, 30.0),
        request(&net, 4, 12, 3, 0.0),
        request(&net, 5, 0, 10, 60.0),
    ];
    let p = params(0.35);
    let skim = skim_for(&net, &requests);
    let rides = enumerate_all(&requests, &skim, &p, &EnumerationOptions::default())
        .unwrap()
        .rides;
    let oracle = oracle_rides(&net, &requests, &p, 3);
    let ours: Vec<_> = rides.keys().into_iter().filter(|k| k.0.len() == 3).collect();
    let theirs: Vec<_> = oracle.keys().filter(|k| k.0.len() == 3).cloned().collect();
    assert!(!theirs.is_empty());
    assert_eq!(ours, theirs);
}

#[test]
fn oracle_fixture_is_current() {
    let dir = common::fixture_dir().join("oracle6");
    let net = ridepool::netgraph::load_network(&dir.join("nodes.csv"), &dir.join("edges.csv")).unwrap();
    let requests = ridepool::demand::read_demand(&dir.join("demand.csv")).unwrap();
    assert_eq!(requests.len(), 6);
    let p = ridepool::config::load_params(&dir.join("params.conf"))
        .unwrap()
        .with_lambda(0.3);
    let oracle = oracle_ride_set(&oracle_rides(&net, &requests, &p, 4));
    assert!(oracle.count_of_degree(3) > 0);
    let mut buf = Vec::new();
    write_rides_to(&mut buf, &oracle).unwrap();
    let path = dir.join("rides.csv");
    if std::env::var_os("UPDATE_FIXTURES").is_some() {
        std::fs::write(&path, &buf).unwrap();
    }
    assert_eq!(String::from_utf8(buf).unwrap(), std::fs::read_to_string(&path).unwrap());

    let skim = skim_for(&net, &requests);
    let rides = enumerate_all(&requests, &skim, &p, &EnumerationOptions::default())
        .unwrap()
        .rides;
    let mut ours = Vec::new();
    write_rides_to(&mut ours, &rides).unwrap();
    assert_eq!(
        String::from_utf8(ours).unwrap(),
        std::fs::read_to_string(&path).unwrap()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pruning_never_changes_the_ride_set(seed in any::<u64>()) {
        let (pruned, _) = enumerate(seed, true);
        let (full, _) = enumerate(seed, false);
        prop_assert_eq!(pruned, full);
    }

    #[test]
    fn attractive_rides_respect_the_shared_time_bound(seed in any::<u64>()) {
        let (net, requests, p) = oracle_instance(seed, 6);
        for ((travelers, _), ride) in oracle_rides(&net, &requests, &p, 4) {
            if travelers.len() < 2 {
                continue;
            }
            for (id, &(shared, _, _)) in travelers.iter().zip(&ride.outcomes) {
                let r = &requests[*id as usize];
                prop_assert!(shared < max_shared_time_bound(&p, r.length_km, r.direct_time));
            }
        }
    }

    #[test]
    fn sub_rides_of_attractive_rides_are_attractive(seed in any::<u64>()) {
        let (rides, _) = enumerate(seed, true);
        let sets: std::collections::BTreeSet<Vec<u64>> = rides.iter().map(|r| r.travelers.clone()).collect();
        for set in sets.iter().filter(|s| s.len() > 1) {
            for skip in 0..set.len() {
                let mut sub = set.clone();
                sub.remove(skip);
                prop_assert!(sets.contains(&sub), "{:?} missing {:?}", set, sub);
            }
        }
    }

    #[test]
    fn larger_discount_keeps_every_ride(seed in any::<u64>(), lo in 0.0f64..0.3, step in 0.0f64..0.2) {
        let (net, requests, _) = oracle_instance(seed, 6);
        let skim = skim_for(&net, &requests);
        let run = |lambda| enumerate_all(&requests, &skim, &params(lambda), &EnumerationOptions::default()).unwrap().rides.keys();
        let small = run(lo);
        let large = run(lo + step);
        prop_assert!(small.is_subset(&large));
    }
}
