//! Utility-driven enumeration of attractive shared rides.
//!
//! A pooled ride is kept only if every co-traveler gains utility compared to
//! riding alone:
//!
//! ```text
//! ΔU = β_c·λ·l + β_t·(t − β_s·(t_s + β_d·t_d))  > 0
//! ```
//!
//! where `l` and `t` are the traveler's direct length (km) and time (s),
//! `t_s` the in-vehicle time on the pooled route and `t_d` the pickup delay.
//! Pairs are searched exhaustively and form the shareability graph; rides of
//! degree `d + 1` are grown from attractive degree-`d` rides by adding a
//! traveler adjacent to every member.
//!
//! Sequences visit all pickups before any dropoff. The vehicle leaves as
//! late as possible without picking anyone up before their request time,
//! which makes every traveler's delay minimal at once.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::demand::{RequestId, TripRequest};
use crate::error::{Error, Result};
use crate::metrics::{
    explosion_guard, graph_stats, logical_memory, ComplexityTrace, GuardDecision, GuardLimits, RunStatus, Stage,
};
use crate::netgraph::SkimMatrix;

/// Highest supported ride degree.
pub const MAX_DEGREE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BehavioralParams {
    /// utility per km of fare; embeds the per-km price
    pub beta_c: f64,
    /// utility per second
    pub beta_t: f64,
    /// sharing discomfort multiplier (≥ 1)
    pub beta_s: f64,
    /// delay sensitivity multiplier (≥ 0)
    pub beta_d: f64,
    /// pooling discount in [0, 1)
    pub lambda: f64,
}

impl Default for BehavioralParams {
    fn default() -> Self {
        BehavioralParams {
            beta_c: 1.0,
            beta_t: 0.005,
            beta_s: 1.2,
            beta_d: 1.0,
            lambda: 0.0,
        }
    }
}

impl BehavioralParams {
    pub fn with_lambda(self, lambda: f64) -> Self {
        BehavioralParams { lambda, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta_c > 0.0 && self.beta_c.is_finite()) {
            return Err(Error::config("beta_c", "must be positive"));
        }
        if !(self.beta_t > 0.0 && self.beta_t.is_finite()) {
            return Err(Error::config("beta_t", "must be positive"));
        }
        if !(self.beta_s >= 1.0 && self.beta_s.is_finite()) {
            return Err(Error::config("beta_s", "must be at least 1"));
        }
        if !(self.beta_d >= 0.0 && self.beta_d.is_finite()) {
            return Err(Error::config("beta_d", "must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.lambda) {
            return Err(Error::config("lambda", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Utility gain of sharing over riding alone.
pub fn utility_gain(p: &BehavioralParams, l: f64, t: f64, t_s: f64, t_d: f64) -> f64 {
    p.beta_c * p.lambda * l + p.beta_t * (t - p.beta_s * (t_s + p.beta_d * t_d))
}

/// In-vehicle time at or above which a traveler cannot gain, whatever the delay.
pub fn max_shared_time_bound(p: &BehavioralParams, l: f64, t: f64) -> f64 {
    t / p.beta_s + p.beta_c * p.lambda * l / (p.beta_t * p.beta_s)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StopSequence {
    pub pickups: Vec<RequestId>,
    pub dropoffs: Vec<RequestId>,
}

impl StopSequence {
    fn is_valid_for(&self, travelers: &[RequestId]) -> bool {
        let mut p = self.pickups.clone();
        let mut d = self.dropoffs.clone();
        p.sort_unstable();
        d.sort_unstable();
        let mut t = travelers.to_vec();
        t.sort_unstable();
        p == t && d == t
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TravelerOutcome {
    pub request: RequestId,
    /// in-vehicle time, seconds
    pub shared_time: f64,
    /// pickup time minus request time, seconds
    pub delay: f64,
    pub delta_u: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RideEvaluation {
    /// vehicle departure from the first pickup, seconds
    pub departure: f64,
    /// in ascending request id order
    pub travelers: Vec<TravelerOutcome>,
}

impl RideEvaluation {
    pub fn total_gain(&self) -> f64 {
        self.travelers.iter().map(|t| t.delta_u).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SequenceOutcome {
    Attractive(RideEvaluation),
    /// first traveler (in id order) without a positive gain
    Unattractive {
        traveler: RequestId,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ride {
    pub id: usize,
    /// ascending request ids
    pub travelers: Vec<RequestId>,
    /// `None` for solo rides
    pub sequence: Option<StopSequence>,
    pub evaluation: RideEvaluation,
    pub total_gain: f64,
}

impl Ride {
    pub fn degree(&self) -> usize {
        self.travelers.len()
    }

    fn sort_key(&self) -> (usize, &[RequestId], Option<&StopSequence>) {
        (self.travelers.len(), &self.travelers, self.sequence.as_ref())
    }
}

/// Rides of all degrees, sorted by degree, travelers, then sequence.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RideSet {
    pub rides: Vec<Ride>,
}

impl RideSet {
    /// Sorts and renumbers ride ids from 0.
    pub fn from_unsorted(mut rides: Vec<Ride>) -> Self {
        rides.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        for (i, r) in rides.iter_mut().enumerate() {
            r.id = i;
        }
        RideSet { rides }
    }

    pub fn len(&self) -> usize {
        self.rides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rides.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Ride> {
        self.rides.iter()
    }

    pub fn count_of_degree(&self, degree: usize) -> usize {
        self.rides.iter().filter(|r| r.degree() == degree).count()
    }

    /// (travelers, sequence) identity of each ride; used for set comparisons.
    pub fn keys(&self) -> BTreeSet<(Vec<RequestId>, Option<StopSequence>)> {
        self.rides
            .iter()
            .map(|r| (r.travelers.clone(), r.sequence.clone()))
            .collect()
    }
}

/// Travelers as nodes, attractive pairs as edges annotated with the best
/// pair gain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ShareabilityGraph {
    nodes: Vec<RequestId>,
    position: HashMap<RequestId, usize>,
    adjacency: Vec<BTreeSet<usize>>,
    edges: BTreeMap<(RequestId, RequestId), f64>,
}

impl ShareabilityGraph {
    pub fn new(nodes: Vec<RequestId>) -> Self {
        let position = nodes.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let adjacency = vec![BTreeSet::new(); nodes.len()];
        ShareabilityGraph {
            nodes,
            position,
            adjacency,
            edges: BTreeMap::new(),
        }
    }

    /// Adds (or strengthens) the undirected edge `a`–`b`.
    pub fn add_edge(&mut self, a: RequestId, b: RequestId, gain: f64) {
        let (pa, pb) = (self.position[&a], self.position[&b]);
        self.adjacency[pa].insert(pb);
        self.adjacency[pb].insert(pa);
        let key = (a.min(b), a.max(b));
        let entry = self.edges.entry(key).or_insert(gain);
        if gain > *entry {
            *entry = gain;
        }
    }

    pub fn nodes(&self) -> &[RequestId] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: RequestId, b: RequestId) -> bool {
        self.edges.contains_key(&(a.min(b), a.max(b)))
    }

    pub fn edge_gain(&self, a: RequestId, b: RequestId) -> Option<f64> {
        self.edges.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = ((RequestId, RequestId), f64)> + '_ {
        self.edges.iter().map(|(&k, &g)| (k, g))
    }

    pub fn neighbors(&self, id: RequestId) -> impl Iterator<Item = RequestId> + '_ {
        self.position
            .get(&id)
            .into_iter()
            .flat_map(move |&p| self.adjacency[p].iter().map(move |&q| self.nodes[q]))
    }

    pub fn degree_of(&self, id: RequestId) -> usize {
        self.position.get(&id).map_or(0, |&p| self.adjacency[p].len())
    }

    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.nodes.len()];
        let mut count = 0;
        for start in 0..self.nodes.len() {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &u in &self.adjacency[v] {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
        }
        count
    }

    /// True when every pair in `members` is an edge.
    pub fn is_clique(&self, members: &[RequestId]) -> bool {
        members
            .iter()
            .enumerate()
            .all(|(i, &a)| members[i + 1..].iter().all(|&b| self.has_edge(a, b)))
    }
}

/// All permutations of `0..n` in lexicographic order.
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Evaluates one stop sequence over `members` (the requests it serves).
pub fn evaluate_sequence(
    skim: &SkimMatrix,
    members: &[TripRequest],
    seq: &StopSequence,
    p: &BehavioralParams,
) -> Result<SequenceOutcome> {
    let mut sorted: Vec<&TripRequest> = members.iter().collect();
    sorted.sort_by_key(|r| r.id);
    let ids: Vec<RequestId> = sorted.iter().map(|r| r.id).collect();
    if !seq.is_valid_for(&ids) {
        return Err(Error::config(
            "sequence",
            "pickups and dropoffs must cover exactly the given requests",
        ));
    }
    let ctx = Context::new(&sorted.iter().map(|r| (*r).clone()).collect::<Vec<_>>(), skim, *p)?;
    let slot = |id: &RequestId| ids.iter().position(|x| x == id).unwrap();
    let pickups: Vec<usize> = seq.pickups.iter().map(slot).collect();
    let dropoffs: Vec<usize> = seq.dropoffs.iter().map(slot).collect();
    let members: Vec<usize> = (0..ids.len()).collect();
    match ctx.evaluate(&members, &pickups, &dropoffs, false)? {
        Eval::Attractive(ev) => Ok(SequenceOutcome::Attractive(ev)),
        Eval::Rejected(slot) => Ok(SequenceOutcome::Unattractive { traveler: ids[slot] }),
        Eval::Pruned => unreachable!("pruning disabled"),
    }
}

enum Eval {
    Attractive(RideEvaluation),
    /// index into the member list of the first traveler without gain
    Rejected(usize),
    Pruned,
}

/// Per-instance lookup tables shared by all evaluations.
struct Context<'a> {
    requests: Vec<TripRequest>,
    skim: &'a SkimMatrix,
    params: BehavioralParams,
    origin: Vec<usize>,
    dest: Vec<usize>,
    bound: Vec<f64>,
}

impl<'a> Context<'a> {
    fn new(requests: &[TripRequest], skim: &'a SkimMatrix, params: BehavioralParams) -> Result<Self> {
        let lookup = |node| skim.index_of(node).ok_or(Error::UnknownNode(node));
        let origin = requests.iter().map(|r| lookup(r.origin)).collect::<Result<_>>()?;
        let dest = requests.iter().map(|r| lookup(r.destination)).collect::<Result<_>>()?;
        let bound = requests
            .iter()
            .map(|r| max_shared_time_bound(&params, r.length_km, r.direct_time))
            .collect();
        Ok(Context {
            requests: requests.to_vec(),
            skim,
            params,
            origin,
            dest,
            bound,
        })
    }

    fn leg(&self, a: usize, b: usize) -> Result<f64> {
        self.skim.at(a, b).ok_or_else(|| {
            let ids = self.skim.node_ids();
            Error::Unreachable {
                from: ids[a],
                to: ids[b],
            }
        })
    }

    /// `members` are request positions (ascending id); `pickups`/`dropoffs`
    /// are permutations of slots into `members`.
    fn evaluate(&self, members: &[usize], pickups: &[usize], dropoffs: &[usize], prune: bool) -> Result<Eval> {
        let d = members.len();
        let mut pick_at = [0.0f64; MAX_DEGREE];
        let mut drop_at = [0.0f64; MAX_DEGREE];
        let mut clock = 0.0;
        let mut here = self.origin[members[pickups[0]]];
        for &slot in pickups {
            let node = self.origin[members[slot]];
            clock += self.leg(here, node)?;
            here = node;
            pick_at[slot] = clock;
        }
        for &slot in dropoffs {
            let node = self.dest[members[slot]];
            clock += self.leg(here, node)?;
            here = node;
            drop_at[slot] = clock;
        }
        if prune {
            for slot in 0..d {
                if drop_at[slot] - pick_at[slot] >= self.bound[members[slot]] {
                    return Ok(Eval::Pruned);
                }
            }
        }
        let departure = (0..d)
            .map(|slot| self.requests[members[slot]].request_time - pick_at[slot])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut travelers = Vec::with_capacity(d);
        for slot in 0..d {
            let r = &self.requests[members[slot]];
            let shared_time = drop_at[slot] - pick_at[slot];
            let delay = (departure + pick_at[slot] - r.request_time).max(0.0);
            let delta_u = utility_gain(&self.params, r.length_km, r.direct_time, shared_time, delay);
            if delta_u.is_nan() || delta_u <= 0.0 {
                return Ok(Eval::Rejected(slot));
            }
            travelers.push(TravelerOutcome {
                request: r.id,
                shared_time,
                delay,
                delta_u,
            });
        }
        Ok(Eval::Attractive(RideEvaluation { departure, travelers }))
    }

    fn solo(&self, pos: usize) -> Ride {
        let r = &self.requests[pos];
        Ride {
            id: 0,
            travelers: vec![r.id],
            sequence: None,
            evaluation: RideEvaluation {
                departure: r.request_time,
                travelers: vec![TravelerOutcome {
                    request: r.id,
                    shared_time: r.direct_time,
                    delay: 0.0,
                    delta_u: 0.0,
                }],
            },
            total_gain: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EnumerationOptions {
    pub max_degree: usize,
    /// skip sequences whose in-vehicle time exceeds the gain bound
    pub pruning: bool,
    pub guard: Option<GuardLimits>,
    /// cooperative time limit, checked between stages and inside degree loops
    pub deadline: Option<Instant>,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            max_degree: MAX_DEGREE,
            pruning: true,
            guard: None,
            deadline: None,
        }
    }
}

impl EnumerationOptions {
    pub fn with_max_degree(max_degree: usize) -> Self {
        EnumerationOptions {
            max_degree,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct Enumeration {
    pub rides: RideSet,
    pub graph: ShareabilityGraph,
    pub trace: ComplexityTrace,
}

/// Why a stage stopped before finishing.
#[derive(Debug)]
enum Interrupted {
    Deadline,
    /// retained rides passed the guard's per-degree ceiling
    RideCap,
}

const DEADLINE_CHECK_EVERY: usize = 64;

fn past(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

/// Enumerates rides over ordered sets of members. Shared by pair search and
/// degree extension.
struct Enumerator<'a> {
    ctx: Context<'a>,
    position: HashMap<RequestId, usize>,
    perms: Vec<Vec<Vec<usize>>>,
    pruning: bool,
    deadline: Option<Instant>,
    ride_cap: Option<u64>,
}

impl<'a> Enumerator<'a> {
    fn new(
        requests: &[TripRequest],
        skim: &'a SkimMatrix,
        p: &BehavioralParams,
        opts: &EnumerationOptions,
    ) -> Result<Self> {
        let mut sorted = requests.to_vec();
        sorted.sort_by_key(|r| r.id);
        let position = sorted.iter().enumerate().map(|(i, r)| (r.id, i)).collect();
        Ok(Enumerator {
            ctx: Context::new(&sorted, skim, *p)?,
            position,
            perms: (0..=MAX_DEGREE).map(permutations).collect(),
            pruning: opts.pruning,
            deadline: opts.deadline,
            ride_cap: opts.guard.map(|g| g.max_rides_per_degree),
        })
    }

    /// Evaluates every sequence over `members`; returns attractive rides.
    fn rides_for(&self, members: &[usize], stage: &mut crate::metrics::StageTrace) -> Result<Vec<Ride>> {
        let d = members.len();
        let ids: Vec<RequestId> = members.iter().map(|&m| self.ctx.requests[m].id).collect();
        let perms = &self.perms[d];
        let mut out = Vec::new();
        for pickups in perms {
            for dropoffs in perms {
                stage.candidates_explored += 1;
                match self.ctx.evaluate(members, pickups, dropoffs, self.pruning)? {
                    Eval::Attractive(evaluation) => {
                        let sequence = StopSequence {
                            pickups: pickups.iter().map(|&s| ids[s]).collect(),
                            dropoffs: dropoffs.iter().map(|&s| ids[s]).collect(),
                        };
                        out.push(Ride {
                            id: 0,
                            travelers: ids.clone(),
                            sequence: Some(sequence),
                            total_gain: evaluation.total_gain(),
                            evaluation,
                        });
                    }
                    Eval::Pruned => stage.pruned += 1,
                    Eval::Rejected(_) => {}
                }
            }
        }
        stage.rides_retained += out.len() as u64;
        Ok(out)
    }

    fn over_cap(&self, stage: &crate::metrics::StageTrace) -> bool {
        self.ride_cap.is_some_and(|cap| stage.rides_retained > cap)
    }

    fn explore_pairs(
        &self,
        trace: &mut ComplexityTrace,
    ) -> Result<Result<(ShareabilityGraph, Vec<Ride>), Interrupted>> {
        let n = self.ctx.requests.len();
        let mut graph = ShareabilityGraph::new(self.ctx.requests.iter().map(|r| r.id).collect());
        let mut rides = Vec::new();
        let stage = trace.stage_mut(Stage::Degree2);
        for i in 0..n {
            if i % DEADLINE_CHECK_EVERY == 0 && past(self.deadline) {
                return Ok(Err(Interrupted::Deadline));
            }
            for j in i + 1..n {
                let found = self.rides_for(&[i, j], stage)?;
                if let Some(best) = found.iter().map(|r| r.total_gain).reduce(f64::max) {
                    graph.add_edge(self.ctx.requests[i].id, self.ctx.requests[j].id, best);
                }
                rides.extend(found);
                if self.over_cap(stage) {
                    return Ok(Err(Interrupted::RideCap));
                }
            }
        }
        Ok(Ok((graph, rides)))
    }

    fn extend_degree(
        &self,
        rides_d: &[Ride],
        graph: &ShareabilityGraph,
        trace: &mut ComplexityTrace,
    ) -> Result<Result<Vec<Ride>, Interrupted>> {
        let Some(degree) = rides_d.first().map(Ride::degree) else {
            return Ok(Ok(Vec::new()));
        };
        let stage = trace.stage_mut(
            Stage::for_degree(degree + 1)
                .ok_or_else(|| Error::config("max_degree", format!("degree {} exceeds {}", degree + 1, MAX_DEGREE)))?,
        );
        let parents: BTreeSet<&[RequestId]> = rides_d.iter().map(|r| r.travelers.as_slice()).collect();
        let mut candidates: BTreeSet<Vec<RequestId>> = BTreeSet::new();
        for parent in parents {
            for k in graph.neighbors(parent[0]) {
                if parent.contains(&k) || !parent[1..].iter().all(|&m| graph.has_edge(m, k)) {
                    continue;
                }
                let mut set = parent.to_vec();
                let at = set.binary_search(&k).unwrap_err();
                set.insert(at, k);
                candidates.insert(set);
            }
        }
        let mut rides = Vec::new();
        for (n, set) in candidates.iter().enumerate() {
            if n % DEADLINE_CHECK_EVERY == 0 && past(self.deadline) {
                return Ok(Err(Interrupted::Deadline));
            }
            let members: Vec<usize> = set.iter().map(|id| self.position[id]).collect();
            rides.extend(self.rides_for(&members, stage)?);
            if self.over_cap(stage) {
                return Ok(Err(Interrupted::RideCap));
            }
        }
        Ok(Ok(rides))
    }
}

/// Pairwise search over all requests: the shareability graph plus every
/// attractive degree-2 ride.
pub fn explore_pairs(
    requests: &[TripRequest],
    skim: &SkimMatrix,
    p: &BehavioralParams,
    trace: &mut ComplexityTrace,
) -> Result<(ShareabilityGraph, Vec<Ride>)> {
    let e = Enumerator::new(requests, skim, p, &EnumerationOptions::default())?;
    let (graph, rides) = e.explore_pairs(trace)?.expect("no deadline configured");
    Ok((graph, RideSet::from_unsorted(rides).rides))
}

/// Grows attractive degree-`d` rides into degree-`d+1` rides.
pub fn extend_degree(
    rides_d: &[Ride],
    requests: &[TripRequest],
    graph: &ShareabilityGraph,
    skim: &SkimMatrix,
    p: &BehavioralParams,
    trace: &mut ComplexityTrace,
) -> Result<Vec<Ride>> {
    let e = Enumerator::new(requests, skim, p, &EnumerationOptions::default())?;
    let rides = e.extend_degree(rides_d, graph, trace)?.expect("no deadline configured");
    Ok(RideSet::from_unsorted(rides).rides)
}

/// Full enumeration from solo rides up to `opts.max_degree`. Guard aborts and
/// deadline expiry return the rides found so far, with the trace status set.
pub fn enumerate_all(
    requests: &[TripRequest],
    skim: &SkimMatrix,
    p: &BehavioralParams,
    opts: &EnumerationOptions,
) -> Result<Enumeration> {
    if !(1..=MAX_DEGREE).contains(&opts.max_degree) {
        return Err(Error::config(
            "max_degree",
            format!("must be between 1 and {MAX_DEGREE}"),
        ));
    }
    p.validate()?;
    let mut trace = ComplexityTrace::new();
    let started = Instant::now();
    let e = Enumerator::new(requests, skim, p, opts)?;
    let mut all: Vec<Ride> = (0..e.ctx.requests.len()).map(|i| e.ctx.solo(i)).collect();
    {
        let init = trace.stage_mut(Stage::Init);
        init.candidates_explored = all.len() as u64;
        init.rides_retained = all.len() as u64;
        init.elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
        init.logical_memory = logical_memory(all.len() as u64, 0);
    }
    let mut graph = ShareabilityGraph::new(e.ctx.requests.iter().map(|r| r.id).collect());

    let finish = |all: Vec<Ride>, graph, trace| Enumeration {
        rides: RideSet::from_unsorted(all),
        graph,
        trace,
    };

    if opts.max_degree < 2 || e.ctx.requests.len() < 2 {
        return Ok(finish(all, graph, trace));
    }
    if past(opts.deadline) {
        trace.status = RunStatus::TimedOut { stage: Stage::Degree2 };
        return Ok(finish(all, graph, trace));
    }

    let clock = Instant::now();
    let mut current = match e.explore_pairs(&mut trace)? {
        Ok((g, rides)) => {
            graph = g;
            rides
        }
        Err(why) => {
            let s = trace.stage_mut(Stage::Degree2);
            s.elapsed_ms = clock.elapsed().as_secs_f64() * 1e3;
            trace.status = interrupted_status(why, Stage::Degree2, &trace, opts);
            return Ok(finish(all, graph, trace));
        }
    };
    all.extend(current.iter().cloned());
    {
        let s = trace.stage_mut(Stage::Degree2);
        s.elapsed_ms = clock.elapsed().as_secs_f64() * 1e3;
        s.logical_memory = logical_memory(all.len() as u64, graph.edge_count() as u64);
    }

    for degree in 2..=opts.max_degree {
        let stage = Stage::for_degree(degree).expect("degree within ceiling");
        if let Some(limits) = &opts.guard {
            if let GuardDecision::Abort(reason) = explosion_guard(&graph_stats(&graph), &trace, limits) {
                trace.status = RunStatus::Aborted { stage, reason };
                return Ok(finish(all, graph, trace));
            }
        }
        if degree == opts.max_degree || current.is_empty() {
            break;
        }
        let next_stage = Stage::for_degree(degree + 1).expect("degree within ceiling");
        if past(opts.deadline) {
            trace.status = RunStatus::TimedOut { stage: next_stage };
            return Ok(finish(all, graph, trace));
        }
        let clock = Instant::now();
        let outcome = e.extend_degree(&current, &graph, &mut trace)?;
        let elapsed = clock.elapsed().as_secs_f64() * 1e3;
        trace.stage_mut(next_stage).elapsed_ms = elapsed;
        match outcome {
            Ok(next) => {
                all.extend(next.iter().cloned());
                trace.stage_mut(next_stage).logical_memory =
                    logical_memory(all.len() as u64, graph.edge_count() as u64);
                current = next;
            }
            Err(why) => {
                trace.status = interrupted_status(why, next_stage, &trace, opts);
                return Ok(finish(all, graph, trace));
            }
        }
    }
    Ok(finish(all, graph, trace))
}

/// Rides of an interrupted stage are dropped; the trace keeps its counters.
fn interrupted_status(why: Interrupted, stage: Stage, trace: &ComplexityTrace, opts: &EnumerationOptions) -> RunStatus {
    match (why, &opts.guard) {
        (Interrupted::RideCap, Some(limits)) => RunStatus::Aborted {
            stage,
            reason: format!(
                "rides_retained {} > {} at degree {}",
                trace.stage(stage).rides_retained,
                limits.max_rides_per_degree,
                stage.degree().unwrap_or(0)
            ),
        },
        _ => RunStatus::TimedOut { stage },
    }
}

pub const RIDES_HEADER: [&str; 7] = [
    "ride_id",
    "degree",
    "travelers",
    "pickup_order",
    "dropoff_order",
    "total_gain",
    "per_traveler_delta_u",
];

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

pub fn write_rides_to<W: Write>(out: W, rides: &RideSet) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let wrap = |e| Error::from_csv("rides", e);
    w.write_record(RIDES_HEADER).map_err(wrap)?;
    for r in rides.iter() {
        let (pickups, dropoffs) = match &r.sequence {
            Some(s) => (join(&s.pickups), join(&s.dropoffs)),
            None => (String::new(), String::new()),
        };
        w.write_record([
            r.id.to_string(),
            r.degree().to_string(),
            join(&r.travelers),
            pickups,
            dropoffs,
            r.total_gain.to_string(),
            join(r.evaluation.travelers.iter().map(|t| t.delta_u)),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io("rides", e))
}

pub fn write_rides(path: &Path, rides: &RideSet) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_rides_to(std::io::BufWriter::new(file), rides)
}
