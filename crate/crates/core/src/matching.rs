//! Traveler-to-ride matching as weighted set partitioning.
//!
//! Every request must be covered by exactly one selected ride; the objective
//! is the total utility gain. Solo rides (gain 0) keep every instance
//! feasible.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::demand::RequestId;
use crate::error::{Error, Result};
use crate::exmas::RideSet;

/// Objectives closer than this are treated as ties.
pub const OBJECTIVE_EPS: f64 = 1e-9;
pub const BRUTE_FORCE_LIMIT: usize = 10;

const ROOT_ITERATIONS: usize = 400;
const NODE_ITERATIONS: usize = 12;

/// A candidate ride as seen by the matching: one column of the partitioning.
#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub ride_id: usize,
    /// ascending request ids
    pub travelers: Vec<RequestId>,
    pub delta_u: Vec<f64>,
    pub gain: f64,
}

impl Column {
    pub fn degree(&self) -> usize {
        self.travelers.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchingProblem {
    requests: Vec<RequestId>,
    columns: Vec<Column>,
}

impl MatchingProblem {
    /// Every request needs a solo column.
    pub fn new(mut requests: Vec<RequestId>, columns: Vec<Column>) -> Result<Self> {
        requests.sort_unstable();
        requests.dedup();
        for &r in &requests {
            if !columns.iter().any(|c| c.travelers == [r]) {
                return Err(Error::Schema(format!("request {r} has no solo ride")));
            }
        }
        for c in &columns {
            if c.travelers.iter().any(|t| requests.binary_search(t).is_err()) {
                return Err(Error::Schema(format!("ride {} covers an unknown request", c.ride_id)));
            }
        }
        Ok(MatchingProblem { requests, columns })
    }

    /// Keeps the best sequence per traveler set; earlier rides win ties.
    pub fn from_rides(requests: Vec<RequestId>, rides: &RideSet) -> Result<Self> {
        let mut best: BTreeMap<&[RequestId], &crate::exmas::Ride> = BTreeMap::new();
        for ride in rides.iter() {
            match best.get(ride.travelers.as_slice()) {
                Some(cur) if cur.total_gain >= ride.total_gain => {}
                _ => {
                    best.insert(&ride.travelers, ride);
                }
            }
        }
        let mut columns: Vec<Column> = best
            .into_values()
            .map(|r| Column {
                ride_id: r.id,
                travelers: r.travelers.clone(),
                delta_u: r.evaluation.travelers.iter().map(|t| t.delta_u).collect(),
                gain: r.total_gain,
            })
            .collect();
        columns.sort_by_key(|c| c.ride_id);
        Self::new(requests, columns)
    }

    pub fn requests(&self) -> &[RequestId] {
        &self.requests
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchedRide {
    pub ride_id: usize,
    pub travelers: Vec<RequestId>,
    pub gain: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchingSolution {
    /// ascending ride id
    pub selected: Vec<MatchedRide>,
    pub objective: f64,
    pub assignment: BTreeMap<RequestId, usize>,
}

impl MatchingSolution {
    pub fn from_selected(mut selected: Vec<MatchedRide>) -> Self {
        selected.sort_by_key(|r| r.ride_id);
        let objective = selected.iter().map(|r| r.gain).sum();
        let assignment = selected
            .iter()
            .flat_map(|r| r.travelers.iter().map(move |&t| (t, r.ride_id)))
            .collect();
        MatchingSolution {
            selected,
            objective,
            assignment,
        }
    }

    fn from_columns(prob: &MatchingProblem, picked: &[usize]) -> Self {
        Self::from_selected(
            picked
                .iter()
                .map(|&c| {
                    let col = &prob.columns[c];
                    MatchedRide {
                        ride_id: col.ride_id,
                        travelers: col.travelers.clone(),
                        gain: col.gain,
                    }
                })
                .collect(),
        )
    }

    pub fn ride_ids(&self) -> Vec<usize> {
        self.selected.iter().map(|r| r.ride_id).collect()
    }

    /// True when every request is covered exactly once.
    pub fn is_partition_of(&self, requests: &[RequestId]) -> bool {
        let mut seen: HashMap<RequestId, usize> = HashMap::new();
        for r in &self.selected {
            for &t in &r.travelers {
                *seen.entry(t).or_default() += 1;
            }
        }
        seen.len() == requests.len() && requests.iter().all(|r| seen.get(r) == Some(&1))
    }
}

/// Candidate ordering: higher objective, then fewer rides, then the
/// lexicographically smaller ascending ride id list.
fn better(obj_a: f64, ids_a: &[usize], obj_b: f64, ids_b: &[usize]) -> bool {
    if obj_a > obj_b + OBJECTIVE_EPS {
        return true;
    }
    if obj_a < obj_b - OBJECTIVE_EPS {
        return false;
    }
    match ids_a.len().cmp(&ids_b.len()) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => ids_a < ids_b,
    }
}

/// Depth-first search over one connected block of travelers.
///
/// Each uncovered traveler carries a potential; the bound is the sum of
/// potentials plus every positive reduced gain `gain - sum of potentials`
/// of an open ride. Potentials start at the best per-capita gain, are
/// lowered while no reduced gain turns positive, then refined by a few
/// subgradient steps per node. Rides whose root reduced gain rules them
/// out are dropped for the rest of the search.
struct Search<'a> {
    prob: &'a MatchingProblem,
    /// local column → problem column
    cols: Vec<usize>,
    gain: Vec<f64>,
    /// column → traveler slots
    members: Vec<Vec<usize>>,
    /// traveler slot → columns covering it
    covering: Vec<Vec<usize>>,
    covered: Vec<bool>,
    /// rides ruled out at the root by their reduced gain
    dead: Vec<bool>,
    /// root bound and its multipliers
    root: Option<(f64, Vec<f64>)>,
    picked: Vec<usize>,
    best_obj: f64,
    best_ids: Vec<usize>,
    best_cols: Vec<usize>,
    deadline: Option<Instant>,
    nodes: u64,
    timed_out: bool,
}

impl<'a> Search<'a> {
    fn new(prob: &'a MatchingProblem, block: &[usize], cols: &[usize], slot_of: &HashMap<RequestId, usize>) -> Self {
        let local: HashMap<usize, usize> = block.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let members: Vec<Vec<usize>> = cols
            .iter()
            .map(|&c| prob.columns[c].travelers.iter().map(|t| local[&slot_of[t]]).collect())
            .collect();
        let mut covering = vec![Vec::new(); block.len()];
        for (k, m) in members.iter().enumerate() {
            for &s in m {
                covering[s].push(k);
            }
        }
        Search {
            prob,
            cols: cols.to_vec(),
            gain: cols.iter().map(|&c| prob.columns[c].gain).collect(),
            members,
            covering,
            covered: vec![false; block.len()],
            dead: vec![false; cols.len()],
            root: None,
            picked: Vec::new(),
            best_obj: f64::NEG_INFINITY,
            best_ids: Vec::new(),
            best_cols: Vec::new(),
            deadline: None,
            nodes: 0,
            timed_out: false,
        }
    }

    fn column(&self, k: usize) -> &Column {
        &self.prob.columns[self.cols[k]]
    }

    fn is_open(&self, k: usize) -> bool {
        !self.dead[k] && self.members[k].iter().all(|&s| !self.covered[s])
    }

    fn per_capita(&self) -> Vec<f64> {
        (0..self.covering.len())
            .map(|s| {
                self.covering[s]
                    .iter()
                    .map(|&k| self.gain[k] / self.members[k].len() as f64)
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    /// One pass lowering each open traveler's potential by its smallest slack
    /// over the open rides that contain it.
    fn lower(&self, potential: &mut [f64]) {
        for t in 0..potential.len() {
            if self.covered[t] {
                continue;
            }
            let mut slack = potential[t];
            for &k in &self.covering[t] {
                if !self.is_open(k) {
                    continue;
                }
                let covered: f64 = self.members[k].iter().map(|&s| potential[s]).sum();
                slack = slack.min(covered - self.gain[k]);
                if slack <= 0.0 {
                    break;
                }
            }
            if slack > 1e-12 {
                potential[t] -= slack;
            }
        }
    }

    fn open_columns(&self) -> Vec<usize> {
        (0..self.cols.len()).filter(|&k| self.is_open(k)).collect()
    }

    /// Upper bound on the open subproblem for multipliers `potential`:
    /// the potentials of open travelers plus every positive reduced gain.
    fn lagrangian(&self, potential: &[f64], open_cols: &[usize]) -> f64 {
        let base: f64 = (0..potential.len())
            .filter(|&s| !self.covered[s])
            .map(|s| potential[s])
            .sum();
        base + open_cols
            .iter()
            .map(|&k| (self.gain[k] - self.members[k].iter().map(|&s| potential[s]).sum::<f64>()).max(0.0))
            .sum::<f64>()
    }

    /// Subgradient descent on the multipliers; keeps the best (lowest) bound.
    fn tighten(
        &self,
        potential: &mut Vec<f64>,
        open_cols: &[usize],
        target: f64,
        iterations: usize,
        mut trail: Option<&mut Vec<Vec<f64>>>,
    ) -> f64 {
        let mut best = self.lagrangian(potential, open_cols);
        let mut best_potential = potential.clone();
        let mut step = 1.0;
        let mut stale = 0;
        let mut current = potential.clone();
        let mut load = vec![0i32; current.len()];
        for it in 0..iterations {
            if best < target {
                break;
            }
            if let Some(trail) = trail.as_deref_mut() {
                if it % 10 == 9 {
                    trail.push(current.clone());
                }
            }
            load.iter_mut().for_each(|l| *l = 0);
            let mut value: f64 = 0.0;
            for &k in open_cols {
                let reduced = self.gain[k] - self.members[k].iter().map(|&s| current[s]).sum::<f64>();
                if reduced > 0.0 {
                    value += reduced;
                    for &s in &self.members[k] {
                        load[s] += 1;
                    }
                }
            }
            let mut norm = 0.0;
            for s in 0..current.len() {
                if !self.covered[s] {
                    value += current[s];
                    let g = 1.0 - load[s] as f64;
                    norm += g * g;
                }
            }
            if value < best - 1e-12 {
                best = value;
                best_potential.clone_from(&current);
                stale = 0;
            } else {
                stale += 1;
                if stale >= 5 {
                    step /= 2.0;
                    stale = 0;
                }
            }
            if norm == 0.0 || step < 1e-4 {
                break;
            }
            let gap = (value - target.max(0.0)).max(1e-6);
            let t = step * gap / norm;
            for s in 0..current.len() {
                if !self.covered[s] {
                    current[s] = (current[s] - t * (1.0 - load[s] as f64)).max(0.0);
                }
            }
        }
        *potential = best_potential;
        best
    }

    fn offer(&mut self, obj: f64) {
        let mut ids: Vec<usize> = self.picked.iter().map(|&k| self.column(k).ride_id).collect();
        ids.sort_unstable();
        if self.best_obj == f64::NEG_INFINITY || better(obj, &ids, self.best_obj, &self.best_ids) {
            let raised = obj > self.best_obj;
            self.best_obj = obj;
            self.best_ids = ids;
            self.best_cols = self.picked.clone();
            if raised {
                self.retire();
            }
        }
    }

    /// Marks rides whose root reduced gain already rules them out.
    fn retire(&mut self) {
        let Some((bound, potential)) = &self.root else {
            return;
        };
        for k in 0..self.cols.len() {
            let reduced = self.gain[k] - self.members[k].iter().map(|&s| potential[s]).sum::<f64>();
            if bound + reduced.min(0.0) < self.best_obj - OBJECTIVE_EPS {
                self.dead[k] = true;
            }
        }
    }

    fn dfs(&mut self, first_open: usize, value: f64, mut potential: Vec<f64>) {
        if self.timed_out {
            return;
        }
        self.nodes += 1;
        if self.nodes.is_multiple_of(1024) && self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.timed_out = true;
            return;
        }
        let Some(first) = (first_open..self.covered.len()).find(|&s| !self.covered[s]) else {
            self.offer(value);
            return;
        };
        self.lower(&mut potential);
        let open_cols = self.open_columns();
        let target = self.best_obj - value - OBJECTIVE_EPS;
        let bound = self.tighten(&mut potential, &open_cols, target, NODE_ITERATIONS, None);
        if value + bound < self.best_obj - OBJECTIVE_EPS {
            return;
        }
        if value + bound <= self.best_obj + OBJECTIVE_EPS && self.loses_tie(&open_cols) {
            return;
        }
        // branch on the open traveler with the fewest live rides
        let open = (first..self.covered.len())
            .filter(|&s| !self.covered[s])
            .min_by_key(|&s| self.covering[s].iter().filter(|&&k| self.is_open(k)).count())
            .unwrap_or(first);
        let reduced = |k: usize| self.gain[k] - self.members[k].iter().map(|&s| potential[s]).sum::<f64>();
        let mut children: Vec<(usize, f64)> = self.covering[open]
            .iter()
            .filter(|&&k| self.is_open(k))
            .map(|&k| (k, reduced(k)))
            .collect();
        children.sort_by(|&(a, ra), &(b, rb)| {
            rb.total_cmp(&ra)
                .then(self.gain[b].total_cmp(&self.gain[a]))
                .then(self.members[a].len().cmp(&self.members[b].len()))
                .then(self.column(a).ride_id.cmp(&self.column(b).ride_id))
        });
        for (k, r) in children {
            // fixing ride k costs its negative reduced gain against the bound
            if value + bound + r.min(0.0) < self.best_obj - OBJECTIVE_EPS {
                continue;
            }
            for i in 0..self.members[k].len() {
                let s = self.members[k][i];
                self.covered[s] = true;
            }
            self.picked.push(k);
            self.dfs(first, value + self.gain[k], potential.clone());
            self.picked.pop();
            for i in 0..self.members[k].len() {
                let s = self.members[k][i];
                self.covered[s] = false;
            }
            if self.timed_out {
                return;
            }
        }
    }

    /// True when every completion of the current picks that at best ties the
    /// incumbent's objective loses the tie-break: it needs at least as many
    /// rides, and some incumbent ride that can no longer be picked has a
    /// smaller id than anything the completion could still differ by.
    fn loses_tie(&self, open_cols: &[usize]) -> bool {
        let open = self.covered.iter().filter(|&&c| !c).count();
        let widest = open_cols.iter().map(|&k| self.members[k].len()).max().unwrap_or(1);
        if self.picked.len() + open.div_ceil(widest) < self.best_ids.len() {
            return false;
        }
        let ride = |k: usize| self.column(k).ride_id;
        let lost = self
            .best_cols
            .iter()
            .filter(|k| !self.picked.contains(k) && !self.is_open(**k))
            .map(|&k| ride(k))
            .min();
        let Some(lost) = lost else {
            return false;
        };
        let gained = self
            .picked
            .iter()
            .filter(|k| !self.best_cols.contains(k))
            .chain(open_cols)
            .map(|&k| ride(k))
            .min()
            .unwrap_or(usize::MAX);
        lost < gained
    }

    /// Greedy incumbent so pruning starts early.
    fn seed_incumbent(&mut self) {
        let mut order: Vec<usize> = (0..self.cols.len()).collect();
        order.sort_by(|&a, &b| greedy_order(self.column(a), self.column(b)));
        self.pack(order);
    }

    /// Greedy packing by reduced gain under the given multipliers.
    fn reduced_incumbent(&mut self, potential: &[f64]) {
        let reduced: Vec<f64> = (0..self.cols.len())
            .map(|k| self.gain[k] - self.members[k].iter().map(|&s| potential[s]).sum::<f64>())
            .collect();
        let mut order: Vec<usize> = (0..self.cols.len()).collect();
        order.sort_by(|&a, &b| {
            reduced[b]
                .total_cmp(&reduced[a])
                .then_with(|| greedy_order(self.column(a), self.column(b)))
        });
        self.pack(order);
    }

    fn pack(&mut self, order: Vec<usize>) {
        let n = self.covered.len();
        let mut owner = vec![usize::MAX; n];
        for k in order {
            if self.members[k].iter().all(|&s| owner[s] == usize::MAX) {
                for &s in &self.members[k] {
                    owner[s] = k;
                }
            }
        }
        self.improve(&mut owner);
        let mut picked: Vec<usize> = owner.clone();
        picked.sort_unstable();
        picked.dedup();
        self.picked = picked;
        let value = self.picked.iter().map(|&k| self.gain[k]).sum();
        self.offer(value);
        self.picked.clear();
    }

    /// Insertion local search: add a ride, drop the rides it overlaps and
    /// refill the freed travelers greedily; keep strict improvements.
    fn improve(&self, owner: &mut [usize]) {
        let mut freed_mark = vec![false; owner.len()];
        for _ in 0..50 {
            let mut improved = false;
            for k in 0..self.cols.len() {
                if self.dead[k] {
                    continue;
                }
                let mut removed: Vec<usize> = self.members[k].iter().map(|&s| owner[s]).collect();
                removed.sort_unstable();
                removed.dedup();
                if removed == [k] {
                    continue;
                }
                let lost: f64 = removed.iter().map(|&r| self.gain[r]).sum();
                let freed: Vec<usize> = removed
                    .iter()
                    .flat_map(|&r| self.members[r].iter().copied())
                    .filter(|s| !self.members[k].contains(s))
                    .collect();
                for &s in &freed {
                    freed_mark[s] = true;
                }
                let mut candidates: Vec<usize> = freed
                    .iter()
                    .flat_map(|&s| self.covering[s].iter().copied())
                    .filter(|&c| self.members[c].iter().all(|&s| freed_mark[s]))
                    .collect();
                candidates.sort_unstable();
                candidates.dedup();
                candidates.sort_by(|&a, &b| greedy_order(self.column(a), self.column(b)));
                let mut refill = Vec::new();
                let mut gained = self.gain[k];
                for c in candidates {
                    if self.members[c].iter().all(|&s| freed_mark[s]) {
                        for &s in &self.members[c] {
                            freed_mark[s] = false;
                        }
                        gained += self.gain[c];
                        refill.push(c);
                    }
                }
                for &s in &freed {
                    freed_mark[s] = false;
                }
                if gained > lost + 1e-9 {
                    for &s in &self.members[k] {
                        owner[s] = k;
                    }
                    for &c in &refill {
                        for &s in &self.members[c] {
                            owner[s] = c;
                        }
                    }
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
    }

    fn run(&mut self) {
        self.seed_incumbent();
        let mut potential = self.per_capita();
        self.lower(&mut potential);
        let open_cols = self.open_columns();
        let mut trail = Vec::new();
        let bound = self.tighten(
            &mut potential,
            &open_cols,
            self.best_obj - OBJECTIVE_EPS,
            ROOT_ITERATIONS,
            Some(&mut trail),
        );
        trail.push(potential.clone());
        for multipliers in &trail {
            self.reduced_incumbent(multipliers);
        }
        self.root = Some((bound, potential.clone()));
        self.retire();
        self.dfs(0, 0.0, potential);
    }
}

/// Groups travelers connected through shared rides; each group is solved alone.
fn blocks(prob: &MatchingProblem, slot_of: &HashMap<RequestId, usize>) -> Vec<(Vec<usize>, Vec<usize>)> {
    let n = prob.requests.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for col in &prob.columns {
        let first = slot_of[&col.travelers[0]];
        for t in &col.travelers[1..] {
            let (a, b) = (find(&mut parent, first), find(&mut parent, slot_of[t]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for s in 0..n {
        let root = find(&mut parent, s);
        groups.entry(root).or_default().0.push(s);
    }
    for (c, col) in prob.columns.iter().enumerate() {
        let root = find(&mut parent, slot_of[&col.travelers[0]]);
        groups.get_mut(&root).expect("root exists").1.push(c);
    }
    groups.into_values().collect()
}

/// Exact search stopped by its deadline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveTimedOut;

fn solve_blocks(prob: &MatchingProblem, deadline: Option<Instant>) -> Result<MatchingSolution, SolveTimedOut> {
    let slot_of: HashMap<RequestId, usize> = prob.requests.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let mut chosen = Vec::new();
    for (block, cols) in blocks(prob, &slot_of) {
        let mut search = Search::new(prob, &block, &cols, &slot_of);
        search.deadline = deadline;
        search.run();
        if search.timed_out {
            return Err(SolveTimedOut);
        }
        chosen.extend(search.best_cols.iter().map(|&k| cols[k]));
    }
    Ok(MatchingSolution::from_columns(prob, &chosen))
}

fn greedy_order(a: &Column, b: &Column) -> Ordering {
    b.gain
        .total_cmp(&a.gain)
        .then(a.degree().cmp(&b.degree()))
        .then(a.ride_id.cmp(&b.ride_id))
}

/// Optimal partition by depth-first branch and bound. Branches over the rides
/// covering the lowest-id uncovered traveler; a node is cut when its value
/// plus an additive bound over the uncovered travelers (each traveler's
/// per-capita gain, lowered while it still dominates every open ride)
/// cannot reach the incumbent.
pub fn solve_exact(prob: &MatchingProblem) -> MatchingSolution {
    solve_blocks(prob, None).expect("no deadline")
}

pub fn solve_exact_until(prob: &MatchingProblem, deadline: Option<Instant>) -> Result<MatchingSolution, SolveTimedOut> {
    solve_blocks(prob, deadline)
}

/// Highest gain first (ties: lower degree, then ride id), skipping rides that
/// overlap accepted ones. Feasible, not necessarily optimal.
pub fn solve_greedy(prob: &MatchingProblem) -> MatchingSolution {
    let mut order: Vec<&Column> = prob.columns.iter().collect();
    order.sort_by(|a, b| greedy_order(a, b));
    let mut covered: HashMap<RequestId, bool> = HashMap::new();
    let mut picked = Vec::new();
    for col in order {
        if col.travelers.iter().all(|t| !covered.contains_key(t)) {
            for &t in &col.travelers {
                covered.insert(t, true);
            }
            picked.push(MatchedRide {
                ride_id: col.ride_id,
                travelers: col.travelers.clone(),
                gain: col.gain,
            });
        }
    }
    MatchingSolution::from_selected(picked)
}

/// Exhaustive search over all partitions; test oracle for small instances.
pub fn brute_force_partition(prob: &MatchingProblem) -> Result<MatchingSolution> {
    let n = prob.requests.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeLimit {
            limit: BRUTE_FORCE_LIMIT,
            actual: n,
        });
    }
    fn go(
        prob: &MatchingProblem,
        covered: &mut Vec<RequestId>,
        picked: &mut Vec<usize>,
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        let Some(&open) = prob.requests.iter().find(|r| !covered.contains(r)) else {
            let obj: f64 = picked.iter().map(|&c| prob.columns[c].gain).sum();
            let mut ids: Vec<usize> = picked.iter().map(|&c| prob.columns[c].ride_id).collect();
            ids.sort_unstable();
            let take = match best {
                None => true,
                Some((bo, bi)) => {
                    let bi_ids: Vec<usize> = {
                        let mut v: Vec<usize> = bi.iter().map(|&c| prob.columns[c].ride_id).collect();
                        v.sort_unstable();
                        v
                    };
                    better(obj, &ids, *bo, &bi_ids)
                }
            };
            if take {
                *best = Some((obj, picked.clone()));
            }
            return;
        };
        for (c, col) in prob.columns.iter().enumerate() {
            if col.travelers.contains(&open) && col.travelers.iter().all(|t| !covered.contains(t)) {
                let before = covered.len();
                covered.extend(&col.travelers);
                picked.push(c);
                go(prob, covered, picked, best);
                picked.pop();
                covered.truncate(before);
            }
        }
    }
    let mut best = None;
    go(prob, &mut Vec::new(), &mut Vec::new(), &mut best);
    let (_, picked) = best.expect("solo rides make every instance feasible");
    Ok(MatchingSolution::from_columns(prob, &picked))
}

pub const SOLUTION_HEADER: [&str; 4] = ["request_id", "ride_id", "degree", "delta_u"];

/// One row per request, then a `# objective=` summary line.
pub fn write_solution_to<W: Write>(mut out: W, prob: &MatchingProblem, sol: &MatchingSolution) -> Result<()> {
    let by_ride: HashMap<usize, &Column> = prob.columns.iter().map(|c| (c.ride_id, c)).collect();
    {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
        let wrap = |e| Error::from_csv("solution", e);
        w.write_record(SOLUTION_HEADER).map_err(wrap)?;
        for (&req, &ride) in &sol.assignment {
            let col = by_ride[&ride];
            let slot = col.travelers.iter().position(|&t| t == req).expect("covered");
            w.write_record([
                req.to_string(),
                ride.to_string(),
                col.degree().to_string(),
                col.delta_u[slot].to_string(),
            ])
            .map_err(wrap)?;
        }
        w.flush().map_err(|e| Error::io("solution", e))?;
    }
    writeln!(out, "# objective={},rides={}", sol.objective, sol.selected.len()).map_err(|e| Error::io("solution", e))
}

pub fn write_solution(path: &Path, prob: &MatchingProblem, sol: &MatchingSolution) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_solution_to(std::io::BufWriter::new(file), prob, sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(ride_id: usize, travelers: &[RequestId], gain: f64) -> Column {
        let d = travelers.len() as f64;
        Column {
            ride_id,
            travelers: travelers.to_vec(),
            delta_u: vec![gain / d; travelers.len()],
            gain,
        }
    }

    fn problem(n: u64, shared: &[(&[RequestId], f64)]) -> MatchingProblem {
        let mut cols: Vec<Column> = (1..=n).map(|i| col(i as usize - 1, &[i], 0.0)).collect();
        for (k, (t, g)) in shared.iter().enumerate() {
            cols.push(col(n as usize + k, t, *g));
        }
        MatchingProblem::new((1..=n).collect(), cols).unwrap()
    }

    #[test]
    fn all_solo() {
        let p = problem(3, &[]);
        let s = solve_exact(&p);
        assert_eq!(s.objective, 0.0);
        assert_eq!(s.selected.len(), 3);
        assert!(s.is_partition_of(p.requests()));
    }

    #[test]
    fn triple_beats_pairs() {
        let p = problem(3, &[(&[1, 2], 0.5), (&[2, 3], 0.6), (&[1, 2, 3], 0.9)]);
        for s in [solve_exact(&p), brute_force_partition(&p).unwrap(), solve_greedy(&p)] {
            assert!((s.objective - 0.9).abs() < 1e-12);
            assert_eq!(s.selected.len(), 1);
            assert_eq!(s.selected[0].travelers, vec![1, 2, 3]);
        }
    }

    #[test]
    fn two_pairs_beat_triple() {
        let p = problem(4, &[(&[1, 2], 0.5), (&[3, 4], 0.5), (&[1, 2, 3], 0.7)]);
        let s = solve_exact(&p);
        assert!((s.objective - 1.0).abs() < 1e-12);
        assert_eq!(s.ride_ids(), vec![4, 5]);
        assert_eq!(brute_force_partition(&p).unwrap().ride_ids(), vec![4, 5]);
    }

    #[test]
    fn greedy_can_be_suboptimal() {
        let p = problem(4, &[(&[1, 2], 0.6), (&[1, 3], 0.5), (&[2, 4], 0.5)]);
        assert!((solve_greedy(&p).objective - 0.6).abs() < 1e-12);
        assert!((solve_exact(&p).objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_pair_greedy_equals_exact() {
        let p = problem(2, &[(&[1, 2], 0.3)]);
        assert_eq!(solve_greedy(&p), solve_exact(&p));
    }

    #[test]
    fn ties_prefer_fewer_rides_then_smaller_ids() {
        // pair (1,2) worth 0.4 versus two rides summing to 0.4
        let p = problem(3, &[(&[1, 2], 0.4), (&[2, 3], 0.4)]);
        let s = solve_exact(&p);
        assert_eq!(s.selected.len(), 2);
        // {1,2}+{3} is ids [2,3]; {1}+{2,3} is ids [0,4]
        assert_eq!(s.ride_ids(), vec![0, 4]);
        assert_eq!(brute_force_partition(&p).unwrap().ride_ids(), vec![0, 4]);
    }

    #[test]
    fn brute_force_limits() {
        let p = problem(1, &[]);
        assert_eq!(brute_force_partition(&p).unwrap().selected.len(), 1);
        let big = problem(11, &[]);
        assert!(matches!(brute_force_partition(&big), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn missing_solo_is_rejected() {
        assert!(MatchingProblem::new(vec![1, 2], vec![col(0, &[1], 0.0), col(1, &[1, 2], 0.3)]).is_err());
    }

    #[test]
    fn solution_csv() {
        let p = problem(3, &[(&[1, 2], 0.5)]);
        let s = solve_exact(&p);
        let mut buf = Vec::new();
        write_solution_to(&mut buf, &p, &s).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "request_id,ride_id,degree,delta_u\n1,3,2,0.25\n2,3,2,0.25\n3,2,1,0\n# objective=0.5,rides=2\n"
        );
    }
}
