//! Complexity indicators: theoretical search space, per-stage traces,
//! shareability-graph statistics, pooling KPIs and the explosion guard.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::demand::TripRequest;
use crate::error::{Error, Result};
use crate::exmas::{BehavioralParams, ShareabilityGraph};
use crate::matching::MatchingSolution;

/// Nominal size of one stored ride record.
pub const RIDE_RECORD_BYTES: u64 = 128;
/// Nominal size of one shareability edge.
pub const EDGE_RECORD_BYTES: u64 = 16;

/// Number of ordered pickup/dropoff sequences over all `d`-subsets of `q`
/// travelers: `C(q, d) * d! * d!`. Exact; zero when `d > q`.
pub fn theoretical_search_space(q: u64, d: u64) -> BigUint {
    if d > q {
        return BigUint::zero();
    }
    // C(q,d)·d!·d! = q·(q−1)···(q−d+1) · d!
    let mut acc = BigUint::one();
    for k in (q - d + 1)..=q {
        acc *= k;
    }
    for k in 2..=d {
        acc *= k;
    }
    acc
}

/// Base-10 logarithm of a big integer (`-inf` for zero).
pub fn log10_big(value: &BigUint) -> f64 {
    if value.is_zero() {
        return f64::NEG_INFINITY;
    }
    let digits = value.to_str_radix(10);
    let lead: String = digits.chars().take(17).collect();
    let mantissa: f64 = lead.parse().unwrap_or(1.0);
    mantissa.log10() + (digits.len() - lead.len()) as f64
}

/// Linear record-count memory model; platform independent.
pub fn logical_memory(rides: u64, edges: u64) -> u64 {
    rides * RIDE_RECORD_BYTES + edges * EDGE_RECORD_BYTES
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Init,
    Degree2,
    Degree3,
    Degree4,
    Matching,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Init,
        Stage::Degree2,
        Stage::Degree3,
        Stage::Degree4,
        Stage::Matching,
    ];

    pub fn for_degree(degree: usize) -> Option<Stage> {
        match degree {
            2 => Some(Stage::Degree2),
            3 => Some(Stage::Degree3),
            4 => Some(Stage::Degree4),
            _ => None,
        }
    }

    pub fn degree(self) -> Option<usize> {
        match self {
            Stage::Degree2 => Some(2),
            Stage::Degree3 => Some(3),
            Stage::Degree4 => Some(4),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Init => "init",
            Stage::Degree2 => "deg2",
            Stage::Degree3 => "deg3",
            Stage::Degree4 => "deg4",
            Stage::Matching => "matching",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StageTrace {
    /// set when the stage started
    pub reached: bool,
    pub candidates_explored: u64,
    /// candidates rejected by the shared-time bound before full evaluation
    pub pruned: u64,
    pub rides_retained: u64,
    pub elapsed_ms: f64,
    pub logical_memory: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    Aborted { stage: Stage, reason: String },
    TimedOut { stage: Stage },
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Aborted { .. } => "aborted",
            RunStatus::TimedOut { .. } => "timed-out",
        }
    }

    pub fn detail(&self) -> String {
        match self {
            RunStatus::Completed => String::new(),
            RunStatus::Aborted { stage, reason } => format!("aborted at {stage}: {reason}"),
            RunStatus::TimedOut { stage } => format!("timed out at {stage}"),
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityTrace {
    stages: [StageTrace; 5],
    pub status: RunStatus,
}

impl Default for ComplexityTrace {
    fn default() -> Self {
        ComplexityTrace {
            stages: Default::default(),
            status: RunStatus::Completed,
        }
    }
}

impl ComplexityTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stage(&self, stage: Stage) -> &StageTrace {
        &self.stages[stage.index()]
    }

    pub fn stage_mut(&mut self, stage: Stage) -> &mut StageTrace {
        let s = &mut self.stages[stage.index()];
        s.reached = true;
        s
    }

    pub fn stages(&self) -> impl Iterator<Item = (Stage, &StageTrace)> {
        Stage::ALL.iter().map(move |&s| (s, &self.stages[s.index()]))
    }

    /// Attractive pooled rides found (degree ≥ 2): the explored search space.
    pub fn search_space(&self) -> u64 {
        self.stages
            .iter()
            .zip(Stage::ALL)
            .filter(|(_, s)| s.degree().is_some())
            .map(|(t, _)| t.rides_retained)
            .sum()
    }

    /// Candidate (traveler set, sequence) pairs considered across degrees.
    pub fn candidates_explored(&self) -> u64 {
        self.stages
            .iter()
            .zip(Stage::ALL)
            .filter(|(_, s)| s.degree().is_some())
            .map(|(t, _)| t.candidates_explored)
            .sum()
    }

    pub fn total_elapsed_ms(&self) -> f64 {
        self.stages.iter().map(|s| s.elapsed_ms).sum()
    }

    /// Copies counters that are independent of wall-clock time.
    pub fn without_timing(&self) -> ComplexityTrace {
        let mut t = self.clone();
        for s in &mut t.stages {
            s.elapsed_ms = 0.0;
        }
        t
    }
}

pub const TRACE_HEADER: [&str; 8] = [
    "stage",
    "reached",
    "candidates_explored",
    "pruned",
    "rides_retained",
    "logical_memory_b",
    "elapsed_ms",
    "status",
];

/// One row per stage; the run status repeats on every row.
pub fn write_trace_to<W: std::io::Write>(out: W, trace: &ComplexityTrace) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let wrap = |e| Error::from_csv("trace", e);
    w.write_record(TRACE_HEADER).map_err(wrap)?;
    for (stage, s) in trace.stages() {
        w.write_record([
            stage.name().to_string(),
            s.reached.to_string(),
            s.candidates_explored.to_string(),
            s.pruned.to_string(),
            s.rides_retained.to_string(),
            s.logical_memory.to_string(),
            format!("{:.3}", s.elapsed_ms),
            trace.status.label().to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io("trace", e))
}

pub fn write_trace(path: &std::path::Path, trace: &ComplexityTrace) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace_to(std::io::BufWriter::new(file), trace)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub avg_degree: f64,
    pub density: f64,
    pub component_count: usize,
}

pub fn graph_stats(g: &ShareabilityGraph) -> GraphStats {
    let n = g.node_count();
    let e = g.edge_count();
    if n == 0 {
        return GraphStats::default();
    }
    let avg_degree = 2.0 * e as f64 / n as f64;
    let density = if n > 1 {
        2.0 * e as f64 / (n as f64 * (n as f64 - 1.0))
    } else {
        0.0
    };
    GraphStats {
        node_count: n,
        edge_count: e,
        avg_degree,
        density,
        component_count: g.component_count(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Kpis {
    pub share_pooled: f64,
    pub rel_utility_gain: f64,
    pub mean_occupancy: f64,
}

/// Non-shared utility of a traveler: full fare plus time disutility.
pub fn non_shared_utility(p: &BehavioralParams, r: &TripRequest) -> f64 {
    -(p.beta_c * r.length_km + p.beta_t * r.direct_time)
}

pub fn kpis(requests: &[TripRequest], solution: &MatchingSolution, p: &BehavioralParams) -> Kpis {
    if requests.is_empty() {
        return Kpis::default();
    }
    let n = requests.len() as f64;
    let mut pooled = 0usize;
    let mut occupancy = 0usize;
    for ride in &solution.selected {
        let d = ride.travelers.len();
        if d >= 2 {
            pooled += d;
        }
        occupancy += d * d;
    }
    let baseline: f64 = requests.iter().map(|r| non_shared_utility(p, r)).sum();
    let rel_utility_gain = if baseline != 0.0 {
        solution.objective / baseline.abs()
    } else {
        0.0
    };
    Kpis {
        share_pooled: pooled as f64 / n,
        rel_utility_gain,
        mean_occupancy: occupancy as f64 / n,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GuardLimits {
    pub max_avg_degree: f64,
    pub max_rides_per_degree: u64,
    /// seconds per stage
    pub max_stage_elapsed: f64,
}

impl Default for GuardLimits {
    fn default() -> Self {
        GuardLimits {
            max_avg_degree: 80.0,
            max_rides_per_degree: 1_000_000,
            max_stage_elapsed: 300.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GuardDecision {
    Continue,
    Abort(String),
}

/// Stop rule evaluated after the pairwise stage and after every degree.
pub fn explosion_guard(stats: &GraphStats, trace: &ComplexityTrace, limits: &GuardLimits) -> GuardDecision {
    if stats.avg_degree > limits.max_avg_degree {
        return GuardDecision::Abort(format!("avg_degree {} > {}", stats.avg_degree, limits.max_avg_degree));
    }
    for (stage, s) in trace.stages() {
        if let Some(d) = stage.degree() {
            if s.rides_retained > limits.max_rides_per_degree {
                return GuardDecision::Abort(format!(
                    "rides_retained {} > {} at degree {}",
                    s.rides_retained, limits.max_rides_per_degree, d
                ));
            }
        }
        if s.elapsed_ms > limits.max_stage_elapsed * 1000.0 {
            return GuardDecision::Abort(format!(
                "{} elapsed {:.0} ms > {} s",
                stage, s.elapsed_ms, limits.max_stage_elapsed
            ));
        }
    }
    GuardDecision::Continue
}
