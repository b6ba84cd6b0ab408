//! Demand × discount sweeps with per-cell time budgets, partial results and
//! resumable CSV output.
//!
//! Each cell runs demand generation, ride enumeration and exact matching,
//! then records the trace, shareability statistics and pooling KPIs as one
//! row of `results.csv`. A run that hits the explosion guard or its time
//! budget still produces a row carrying every column computed so far.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::config::{params_from, FlatConfig, PARAM_KEYS};
use crate::demand::{generate_demand, DemandConfig, TripRequest, DEFAULT_BATCH_LENGTH};
use crate::error::{Error, Result};
use crate::exmas::{enumerate_all, BehavioralParams, EnumerationOptions, MAX_DEGREE};
use crate::matching::{solve_exact_until, MatchingProblem, MatchingSolution};
use crate::metrics::{
    graph_stats, kpis, logical_memory, ComplexityTrace, GraphStats, GuardLimits, Kpis, RunStatus, Stage,
};
use crate::netgraph::{generate_grid, load_network, Network};

pub const SCHEMA_LINE: &str = "# schema=1";

#[derive(Clone, Debug, PartialEq)]
pub enum NetworkSource {
    Grid {
        rows: usize,
        cols: usize,
        spacing: f64,
        speed: f64,
    },
    Files {
        nodes: PathBuf,
        edges: PathBuf,
    },
}

impl NetworkSource {
    pub fn build(&self) -> Result<Network> {
        match self {
            NetworkSource::Grid {
                rows,
                cols,
                spacing,
                speed,
            } => generate_grid(*rows, *cols, *spacing, *speed),
            NetworkSource::Files { nodes, edges } => load_network(nodes, edges),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub demand_levels: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub replications: usize,
    pub base_seed: u64,
    pub max_degree: usize,
    /// seconds
    pub cell_time_budget: f64,
    pub guard: GuardLimits,
    pub network: NetworkSource,
    pub center: Option<(f64, f64)>,
    /// λ is replaced per cell
    pub params: BehavioralParams,
    pub batch_length: f64,
    /// kernel scales in meters; `None` derives them from the network radius
    pub tau_origin: Option<f64>,
    pub tau_dest: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            demand_levels: (1..=12).map(|k| k * 50).collect(),
            lambdas: vec![0.05, 0.10, 0.20, 0.25, 0.30, 0.35, 0.40],
            replications: 3,
            base_seed: 1,
            max_degree: MAX_DEGREE,
            cell_time_budget: 300.0,
            guard: GuardLimits::default(),
            network: NetworkSource::Grid {
                rows: 15,
                cols: 15,
                spacing: 300.0,
                speed: 10.0,
            },
            center: None,
            params: BehavioralParams::default(),
            batch_length: DEFAULT_BATCH_LENGTH,
            tau_origin: None,
            tau_dest: None,
        }
    }
}

const SWEEP_KEYS: &[&str] = &[
    "demand_levels",
    "lambdas",
    "replications",
    "base_seed",
    "max_degree",
    "cell_time_budget_s",
    "guard_max_avg_degree",
    "guard_max_rides_per_degree",
    "guard_max_stage_s",
    "grid_rows",
    "grid_cols",
    "grid_spacing_m",
    "grid_speed_mps",
    "nodes_file",
    "edges_file",
    "center_x",
    "center_y",
    "batch_s",
    "tau_origin_m",
    "tau_dest_m",
];

impl SweepConfig {
    /// Reads the flat config format. Relative network paths resolve against
    /// `base_dir`.
    pub fn from_flat(cfg: &FlatConfig, base_dir: &Path) -> Result<Self> {
        let allowed: Vec<&str> = SWEEP_KEYS.iter().chain(PARAM_KEYS.iter()).copied().collect();
        cfg.check_keys(&allowed)?;
        let d = SweepConfig::default();
        let network = match (cfg.get::<String>("nodes_file")?, cfg.get::<String>("edges_file")?) {
            (Some(nodes), Some(edges)) => NetworkSource::Files {
                nodes: base_dir.join(nodes),
                edges: base_dir.join(edges),
            },
            (None, None) => {
                let NetworkSource::Grid {
                    rows,
                    cols,
                    spacing,
                    speed,
                } = d.network
                else {
                    unreachable!()
                };
                NetworkSource::Grid {
                    rows: cfg.get_or("grid_rows", rows)?,
                    cols: cfg.get_or("grid_cols", cols)?,
                    spacing: cfg.get_or("grid_spacing_m", spacing)?,
                    speed: cfg.get_or("grid_speed_mps", speed)?,
                }
            }
            _ => {
                return Err(Error::config(
                    "nodes_file/edges_file",
                    "both files must be given together",
                ))
            }
        };
        let center = match (cfg.get::<f64>("center_x")?, cfg.get::<f64>("center_y")?) {
            (Some(x), Some(y)) => Some((x, y)),
            (None, None) => None,
            _ => return Err(Error::config("center_x/center_y", "give both or neither")),
        };
        let out = SweepConfig {
            demand_levels: cfg.get_list("demand_levels")?.unwrap_or(d.demand_levels),
            lambdas: cfg.get_list("lambdas")?.unwrap_or(d.lambdas),
            replications: cfg.get_or("replications", d.replications)?,
            base_seed: cfg.get_or("base_seed", d.base_seed)?,
            max_degree: cfg.get_or("max_degree", d.max_degree)?,
            cell_time_budget: cfg.get_or("cell_time_budget_s", d.cell_time_budget)?,
            guard: GuardLimits {
                max_avg_degree: cfg.get_or("guard_max_avg_degree", d.guard.max_avg_degree)?,
                max_rides_per_degree: cfg.get_or("guard_max_rides_per_degree", d.guard.max_rides_per_degree)?,
                max_stage_elapsed: cfg.get_or("guard_max_stage_s", d.guard.max_stage_elapsed)?,
            },
            network,
            center,
            params: params_from(cfg, d.params)?,
            batch_length: cfg.get_or("batch_s", d.batch_length)?,
            tau_origin: cfg.get("tau_origin_m")?,
            tau_dest: cfg.get("tau_dest_m")?,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let flat = FlatConfig::load(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_flat(&flat, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.demand_levels.is_empty() || self.demand_levels.contains(&0) {
            return Err(Error::config("demand_levels", "need at least one positive level"));
        }
        if self.lambdas.is_empty() {
            return Err(Error::config("lambdas", "need at least one discount"));
        }
        for &l in &self.lambdas {
            self.params.with_lambda(l).validate()?;
        }
        if self.replications == 0 {
            return Err(Error::config("replications", "must be at least 1"));
        }
        if !(2..=MAX_DEGREE).contains(&self.max_degree) {
            return Err(Error::config(
                "max_degree",
                format!("must be between 2 and {MAX_DEGREE}"),
            ));
        }
        if self.cell_time_budget.is_nan() || self.cell_time_budget <= 0.0 {
            return Err(Error::config("cell_time_budget_s", "must be positive"));
        }
        let g = &self.guard;
        if !(g.max_avg_degree > 0.0 && g.max_rides_per_degree > 0 && g.max_stage_elapsed > 0.0) {
            return Err(Error::config("guard_*", "limits must be positive"));
        }
        if self.batch_length.is_nan() || self.batch_length <= 0.0 {
            return Err(Error::config("batch_s", "must be positive"));
        }
        Ok(())
    }

    pub fn build_network(&self) -> Result<Network> {
        let net = self.network.build()?;
        Ok(match self.center {
            Some((x, y)) => net.with_center(x, y),
            None => net,
        })
    }

    pub fn demand_config(&self, net: &Network, n: usize, seed: u64) -> DemandConfig {
        let mut d = DemandConfig::for_network(net, n, seed);
        d.batch_length = self.batch_length;
        if let Some(t) = self.tau_origin {
            d.tau_origin = t;
        }
        if let Some(t) = self.tau_dest {
            d.tau_dest = t;
        }
        d
    }

    pub fn cell_count(&self) -> usize {
        self.demand_levels.len() * self.lambdas.len() * self.replications
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Demand seed of a cell. The discount is deliberately not mixed in: every λ
/// at a given (demand level, replication) sees the same travelers.
pub fn cell_seed(base_seed: u64, demand_level: usize, replication: usize) -> u64 {
    let mut h = splitmix64(base_seed);
    h = splitmix64(h ^ demand_level as u64);
    splitmix64(h ^ replication as u64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub demand_level: usize,
    pub lambda: f64,
    pub replication: usize,
    pub seed: u64,
    pub status: RunStatus,
    pub trace: ComplexityTrace,
    pub graph: Option<GraphStats>,
    /// `None` for degrees not fully explored
    pub rides_per_degree: [Option<u64>; MAX_DEGREE],
    pub objective: Option<f64>,
    pub kpis: Option<Kpis>,
}

impl CellResult {
    pub fn search_space(&self) -> u64 {
        self.rides_per_degree[1..].iter().flatten().sum()
    }

    pub fn header() -> Vec<String> {
        let mut h: Vec<String> = [
            "demand_level",
            "lambda",
            "replication",
            "seed",
            "status",
            "status_detail",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for stage in Stage::ALL {
            for field in ["candidates", "pruned", "retained", "memory_b", "ms"] {
                h.push(format!("{}_{}", stage.name(), field));
            }
        }
        for s in [
            "graph_nodes",
            "graph_edges",
            "avg_degree",
            "density",
            "components",
            "rides_d1",
            "rides_d2",
            "rides_d3",
            "rides_d4",
            "search_space",
            "candidates_total",
            "objective",
            "share_pooled",
            "rel_utility_gain",
            "mean_occupancy",
            "total_ms",
        ] {
            h.push(s.to_string());
        }
        h
    }

    /// Columns carrying wall-clock measurements.
    pub fn is_timing_column(name: &str) -> bool {
        name.ends_with("_ms")
    }

    pub fn to_record(&self) -> Vec<String> {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        let mut r = vec![
            self.demand_level.to_string(),
            self.lambda.to_string(),
            self.replication.to_string(),
            self.seed.to_string(),
            self.status.label().to_string(),
            self.status.detail(),
        ];
        for (_, s) in self.trace.stages() {
            if s.reached {
                r.push(s.candidates_explored.to_string());
                r.push(s.pruned.to_string());
                r.push(s.rides_retained.to_string());
                r.push(s.logical_memory.to_string());
                r.push(format!("{:.3}", s.elapsed_ms));
            } else {
                r.extend(std::iter::repeat_n(String::new(), 5));
            }
        }
        let g = self.graph;
        r.push(opt(g.map(|g| g.node_count)));
        r.push(opt(g.map(|g| g.edge_count)));
        r.push(opt(g.map(|g| g.avg_degree)));
        r.push(opt(g.map(|g| g.density)));
        r.push(opt(g.map(|g| g.component_count)));
        for d in self.rides_per_degree {
            r.push(opt(d));
        }
        r.push(self.search_space().to_string());
        r.push(self.trace.candidates_explored().to_string());
        r.push(opt(self.objective));
        r.push(opt(self.kpis.map(|k| k.share_pooled)));
        r.push(opt(self.kpis.map(|k| k.rel_utility_gain)));
        r.push(opt(self.kpis.map(|k| k.mean_occupancy)));
        r.push(format!("{:.3}", self.trace.total_elapsed_ms()));
        r
    }
}

/// Everything a cell computes besides the summary row.
#[derive(Clone, Debug)]
pub struct CellRun {
    pub result: CellResult,
    pub requests: Vec<TripRequest>,
    pub solution: Option<MatchingSolution>,
}

/// One sweep cell on a prebuilt network.
pub fn run_cell(
    cfg: &SweepConfig,
    net: &Network,
    demand_level: usize,
    lambda: f64,
    replication: usize,
) -> Result<CellResult> {
    let seed = cell_seed(cfg.base_seed, demand_level, replication);
    let requests = generate_demand(net, &cfg.demand_config(net, demand_level, seed))?;
    run_instance(cfg, net, requests, demand_level, lambda, replication, seed).map(|r| r.result)
}

/// Runs the pipeline on given requests.
pub fn run_instance(
    cfg: &SweepConfig,
    net: &Network,
    requests: Vec<TripRequest>,
    demand_level: usize,
    lambda: f64,
    replication: usize,
    seed: u64,
) -> Result<CellRun> {
    let started = Instant::now();
    let deadline = started + Duration::from_secs_f64(cfg.cell_time_budget);
    let params = cfg.params.with_lambda(lambda);
    params.validate()?;

    let mut endpoints: Vec<u64> = requests.iter().flat_map(|r| [r.origin, r.destination]).collect();
    endpoints.sort_unstable();
    endpoints.dedup();
    let skim = net.build_skim(&endpoints)?;
    let prep_ms = started.elapsed().as_secs_f64() * 1e3;

    let opts = EnumerationOptions {
        max_degree: cfg.max_degree,
        pruning: true,
        guard: Some(cfg.guard),
        deadline: Some(deadline),
    };
    let enumeration = enumerate_all(&requests, &skim, &params, &opts)?;
    let mut trace = enumeration.trace;
    trace.stage_mut(Stage::Init).elapsed_ms += prep_ms;

    let mut status = trace.status.clone();
    let explored_pairs =
        trace.stage(Stage::Degree2).reached && !matches!(status, RunStatus::TimedOut { stage: Stage::Degree2 });
    let graph = (explored_pairs || cfg.max_degree < 2 || requests.len() < 2).then(|| graph_stats(&enumeration.graph));

    let mut rides_per_degree = [None; MAX_DEGREE];
    rides_per_degree[0] = Some(requests.len() as u64);
    for degree in 2..=cfg.max_degree {
        let stage = Stage::for_degree(degree).expect("degree within ceiling");
        let complete = match &status {
            RunStatus::Completed => true,
            RunStatus::Aborted { stage: at, .. } => stage <= *at,
            RunStatus::TimedOut { stage: at } => stage < *at,
        };
        if complete {
            rides_per_degree[degree - 1] = Some(enumeration.rides.count_of_degree(degree) as u64);
        }
    }

    let mut objective = None;
    let mut cell_kpis = None;
    let mut solution = None;
    if status.is_completed() {
        let ids = requests.iter().map(|r| r.id).collect();
        let clock = Instant::now();
        let problem = MatchingProblem::from_rides(ids, &enumeration.rides)?;
        let solved = solve_exact_until(&problem, Some(deadline));
        let m = trace.stage_mut(Stage::Matching);
        m.candidates_explored = problem.columns().len() as u64;
        m.logical_memory = logical_memory(problem.columns().len() as u64, enumeration.graph.edge_count() as u64);
        m.elapsed_ms = clock.elapsed().as_secs_f64() * 1e3;
        match solved {
            Ok(sol) => {
                m.rides_retained = sol.selected.len() as u64;
                objective = Some(sol.objective);
                cell_kpis = Some(kpis(&requests, &sol, &params));
                solution = Some(sol);
            }
            Err(_) => {
                status = RunStatus::TimedOut { stage: Stage::Matching };
            }
        }
    }
    trace.status = status.clone();

    Ok(CellRun {
        result: CellResult {
            demand_level,
            lambda,
            replication,
            seed,
            status,
            trace,
            graph,
            rides_per_degree,
            objective,
            kpis: cell_kpis,
        },
        requests,
        solution,
    })
}

type CellKey = (usize, String, usize);

fn key_of(demand: usize, lambda: f64, rep: usize) -> CellKey {
    (demand, lambda.to_string(), rep)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SweepSummary {
    pub written: usize,
    pub skipped: usize,
    pub aborted: usize,
    pub timed_out: usize,
}

fn results_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(false)
        .from_reader(text.as_bytes())
}

/// Completed cell keys of an existing results file. A trailing partial line
/// left by an interrupted write is dropped from the file.
fn existing_keys(path: &Path) -> Result<BTreeSet<CellKey>> {
    let name = path.display().to_string();
    let mut text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if !text.is_empty() && !text.ends_with('\n') {
        text.truncate(text.rfind('\n').map_or(0, |i| i + 1));
        std::fs::write(path, &text).map_err(|e| Error::io(path, e))?;
    }
    let expected = CellResult::header().join(",");
    let mut lines = text.lines();
    if lines.next() != Some(SCHEMA_LINE) || lines.next() != Some(expected.as_str()) {
        return Err(Error::Schema(format!(
            "{name}: header does not match results schema 1; refusing to append"
        )));
    }
    let mut keys = BTreeSet::new();
    for row in results_reader(&text).records() {
        let row = row.map_err(|e| Error::from_csv(&name, e))?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or("");
        let bad = |what: &str| Error::malformed(&name, line, format!("bad {what}"));
        let demand: usize = field(0).parse().map_err(|_| bad("demand_level"))?;
        let lambda: f64 = field(1).parse().map_err(|_| bad("lambda"))?;
        let rep: usize = field(2).parse().map_err(|_| bad("replication"))?;
        keys.insert(key_of(demand, lambda, rep));
    }
    Ok(keys)
}

fn write_row(out: &mut File, record: &[String], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(record).map_err(|e| Error::from_csv("results", e))?;
    let bytes = w.into_inner().map_err(|e| Error::Schema(e.to_string()))?;
    // single write per row so an interrupt leaves at most one partial line
    out.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Runs every (demand, λ, replication) cell not already present in `out`.
/// Rows are appended and flushed one at a time through a single writer.
/// Without `resume`, an existing file is replaced.
pub fn run_sweep(cfg: &SweepConfig, out: &Path, resume: bool, jobs: usize) -> Result<SweepSummary> {
    cfg.validate()?;
    let net = cfg.build_network()?;
    let done = if resume && out.exists() {
        existing_keys(out)?
    } else {
        let mut f = File::create(out).map_err(|e| Error::io(out, e))?;
        writeln!(f, "{SCHEMA_LINE}").map_err(|e| Error::io(out, e))?;
        write_row(&mut f, &CellResult::header(), out)?;
        BTreeSet::new()
    };

    let mut pending = Vec::new();
    let mut summary = SweepSummary::default();
    for &demand in &cfg.demand_levels {
        for &lambda in &cfg.lambdas {
            for rep in 0..cfg.replications {
                if done.contains(&key_of(demand, lambda, rep)) {
                    summary.skipped += 1;
                } else {
                    pending.push((demand, lambda, rep));
                }
            }
        }
    }

    let file = OpenOptions::new()
        .append(true)
        .open(out)
        .map_err(|e| Error::io(out, e))?;
    let writer = Mutex::new((file, summary));
    let run = |&(demand, lambda, rep): &(usize, f64, usize)| -> Result<()> {
        let cell = run_cell(cfg, &net, demand, lambda, rep)?;
        let mut guard = writer.lock().expect("writer lock");
        let (file, summary) = &mut *guard;
        write_row(file, &cell.to_record(), out)?;
        summary.written += 1;
        match cell.status {
            RunStatus::Aborted { .. } => summary.aborted += 1,
            RunStatus::TimedOut { .. } => summary.timed_out += 1,
            RunStatus::Completed => {}
        }
        Ok(())
    };
    if jobs <= 1 {
        pending.iter().try_for_each(run)?;
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::config("jobs", e.to_string()))?;
        pool.install(|| pending.par_iter().try_for_each(run))?;
    }
    let (_, summary) = writer.into_inner().expect("writer lock");
    Ok(summary)
}

/// A results file loaded as rows of named columns.
#[derive(Clone, Debug, Default)]
pub struct ResultsTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ResultsTable {
    pub fn load(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if text.trim().is_empty() {
            return Ok(ResultsTable::default());
        }
        let mut reader = results_reader(&text);
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| Error::from_csv(&name, e))?
            .iter()
            .map(String::from)
            .collect();
        let rows = reader
            .records()
            .map(|r| {
                r.map(|r| r.iter().map(String::from).collect())
                    .map_err(|e| Error::from_csv(&name, e))
            })
            .collect::<Result<_>>()?;
        Ok(ResultsTable { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn value(&self, row: &[String], name: &str) -> Option<f64> {
        self.column(name).and_then(|i| row.get(i)).and_then(|v| v.parse().ok())
    }

    /// Rows with every timing column blanked.
    pub fn without_timing(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.header)
                    .map(|(v, h)| {
                        if CellResult::is_timing_column(h) {
                            String::new()
                        } else {
                            v.clone()
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    })
}

/// One figure-data file: `x,series,y` points with y the median over replications.
#[derive(Clone, Copy, Debug)]
pub struct FigureSpec {
    pub file: &'static str,
    pub x: &'static str,
    pub y: &'static str,
    /// only rows with status `completed`
    pub completed_only: bool,
}

pub const FIGURES: [FigureSpec; 9] = [
    FigureSpec {
        file: "fig3a_search_space.csv",
        x: "demand_level",
        y: "search_space",
        completed_only: false,
    },
    FigureSpec {
        file: "fig3b_runtime.csv",
        x: "demand_level",
        y: "total_ms",
        completed_only: false,
    },
    FigureSpec {
        file: "fig4a_pairs.csv",
        x: "demand_level",
        y: "rides_d2",
        completed_only: false,
    },
    FigureSpec {
        file: "fig4b_triples.csv",
        x: "demand_level",
        y: "rides_d3",
        completed_only: false,
    },
    FigureSpec {
        file: "fig5a_utility_gain.csv",
        x: "demand_level",
        y: "rel_utility_gain",
        completed_only: true,
    },
    FigureSpec {
        file: "fig5b_share_pooled.csv",
        x: "demand_level",
        y: "share_pooled",
        completed_only: true,
    },
    FigureSpec {
        file: "fig6a_efficiency_vs_search_space.csv",
        x: "search_space",
        y: "rel_utility_gain",
        completed_only: true,
    },
    FigureSpec {
        file: "fig6b_search_space_vs_avg_degree.csv",
        x: "avg_degree",
        y: "search_space",
        completed_only: false,
    },
    FigureSpec {
        file: "fig7_avg_degree.csv",
        x: "demand_level",
        y: "avg_degree",
        completed_only: false,
    },
];

/// Figure points: per (demand level, λ) cell, the median x and y over the
/// replications that carry both values.
pub fn figure_points(table: &ResultsTable, fig: &FigureSpec) -> Vec<(f64, String, f64)> {
    let status = table.column("status");
    let mut cells: BTreeMap<(String, u64), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for row in &table.rows {
        if fig.completed_only && status.and_then(|i| row.get(i)).map(String::as_str) != Some("completed") {
            continue;
        }
        let (Some(demand), Some(lambda)) = (
            table.value(row, "demand_level"),
            table.column("lambda").and_then(|i| row.get(i)),
        ) else {
            continue;
        };
        let (Some(x), Some(y)) = (table.value(row, fig.x), table.value(row, fig.y)) else {
            continue;
        };
        let entry = cells.entry((lambda.clone(), demand as u64)).or_default();
        entry.0.push(x);
        entry.1.push(y);
    }
    let mut points: Vec<(f64, String, f64)> = cells
        .into_iter()
        .map(|((lambda, _), (mut xs, mut ys))| {
            (
                median(&mut xs).expect("non-empty"),
                lambda,
                median(&mut ys).expect("non-empty"),
            )
        })
        .collect();
    points.sort_by(|a, b| {
        let la: f64 = a.1.parse().unwrap_or(0.0);
        let lb: f64 = b.1.parse().unwrap_or(0.0);
        la.total_cmp(&lb).then(a.0.total_cmp(&b.0))
    });
    points
}

const SUMMARY_INDICATORS: [&str; 7] = [
    "search_space",
    "candidates_total",
    "avg_degree",
    "objective",
    "share_pooled",
    "rel_utility_gain",
    "total_ms",
];

/// Writes one CSV per figure into `out_dir` and returns a text summary with
/// min / median / max of each indicator per λ.
pub fn report(results: &Path, out_dir: &Path) -> Result<String> {
    let table = ResultsTable::load(results)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for fig in &FIGURES {
        let path = out_dir.join(fig.file);
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::from_csv(fig.file, e))?;
        w.write_record(["x", "series", "y"])
            .map_err(|e| Error::from_csv(fig.file, e))?;
        for (x, series, y) in figure_points(&table, fig) {
            w.write_record([x.to_string(), series, y.to_string()])
                .map_err(|e| Error::from_csv(fig.file, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }

    let mut text = String::new();
    let lambda_col = table.column("lambda");
    let mut lambdas: Vec<String> = table
        .rows
        .iter()
        .filter_map(|r| lambda_col.and_then(|i| r.get(i)).cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    lambdas.sort_by(|a, b| a.parse::<f64>().unwrap_or(0.0).total_cmp(&b.parse().unwrap_or(0.0)));
    let statuses = table.column("status");
    let count = |s: &str| {
        table
            .rows
            .iter()
            .filter(|r| statuses.and_then(|i| r.get(i)).map(String::as_str) == Some(s))
            .count()
    };
    text.push_str(&format!(
        "{} rows: {} completed, {} aborted, {} timed-out\n",
        table.rows.len(),
        count("completed"),
        count("aborted"),
        count("timed-out")
    ));
    for indicator in SUMMARY_INDICATORS {
        text.push_str(&format!("{indicator}\n"));
        for lambda in &lambdas {
            let mut vals: Vec<f64> = table
                .rows
                .iter()
                .filter(|r| lambda_col.and_then(|i| r.get(i)) == Some(lambda))
                .filter_map(|r| table.value(r, indicator))
                .collect();
            let (min, max) = vals
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            match median(&mut vals) {
                Some(med) => text.push_str(&format!(
                    "  lambda={lambda:<5} min={min:.4} median={med:.4} max={max:.4}\n"
                )),
                None => text.push_str(&format!("  lambda={lambda:<5} no data\n")),
            }
        }
    }
    Ok(text)
}
