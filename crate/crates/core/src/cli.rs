//! Command-line front end. `main` returns the process exit code:
//! 0 on success, 2 on configuration or validation errors, 3 when a solve
//! stops at the explosion guard (partial outputs are still written),
//! 1 on I/O failures.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::load_params;
use crate::demand::{generate_demand, read_demand, write_demand, DemandConfig};
use crate::error::{Error, Result};
use crate::exmas::{enumerate_all, write_rides, BehavioralParams, EnumerationOptions, MAX_DEGREE};
use crate::experiment::{report, run_sweep, SweepConfig};
use crate::matching::{solve_exact, write_solution, MatchingProblem};
use crate::metrics::{
    graph_stats, kpis, log10_big, logical_memory, theoretical_search_space, write_trace, GuardLimits, RunStatus,
};
use crate::netgraph::{generate_grid, load_network, save_network, Network};

pub const NODES_FILE: &str = "nodes.csv";
pub const EDGES_FILE: &str = "edges.csv";

#[derive(Parser, Debug)]
#[command(
    name = "ridepool",
    version,
    about = "Ride-pooling enumeration, matching and complexity sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build or import a road network (written as nodes.csv + edges.csv)
    #[command(subcommand)]
    Net(NetCommand),
    /// Generate trip requests
    #[command(subcommand)]
    Demand(DemandCommand),
    /// Enumerate attractive rides and match travelers for one demand file
    Solve(SolveArgs),
    /// Run a demand × discount sweep into a results CSV
    Sweep(SweepArgs),
    /// Theoretical search-space table
    Theory(TheoryArgs),
    /// Per-figure CSVs and a text summary from a results CSV
    Report(ReportArgs),
}

#[derive(Subcommand, Debug)]
enum NetCommand {
    /// Bidirectional square lattice
    Grid {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        /// edge length, meters
        #[arg(long)]
        spacing: f64,
        /// meters per second
        #[arg(long)]
        speed: f64,
        /// output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate node and edge CSV files and copy them into a network directory
    Import {
        #[arg(long)]
        nodes: PathBuf,
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum DemandCommand {
    Gen {
        /// network directory
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = crate::demand::DEFAULT_BATCH_LENGTH)]
        batch_s: f64,
        #[arg(long)]
        seed: u64,
        /// origin distance decay, meters (default: network radius)
        #[arg(long)]
        tau_origin_m: Option<f64>,
        /// destination distance decay, meters (default: radius / 10)
        #[arg(long)]
        tau_dest_m: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// network directory
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    demand: PathBuf,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = MAX_DEGREE)]
    max_degree: usize,
    /// beta_c, beta_t, beta_s, beta_d as `key = value` lines
    #[arg(long)]
    params_file: Option<PathBuf>,
    #[arg(long)]
    guard_max_avg_degree: Option<f64>,
    #[arg(long)]
    guard_max_rides_per_degree: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// keep existing rows and run only the missing cells
    #[arg(long)]
    resume: bool,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args, Debug)]
struct TheoryArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    q_list: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    d_list: Vec<u64>,
    /// defaults to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn main() -> i32 {
    run(std::env::args_os())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => 1,
        _ => 2,
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Net(NetCommand::Grid {
            rows,
            cols,
            spacing,
            speed,
            out,
        }) => {
            let net = generate_grid(rows, cols, spacing, speed)?;
            write_network(&net, &out)?;
            println!("nodes={} edges={}", net.nodes().len(), net.edges().len());
        }
        Command::Net(NetCommand::Import { nodes, edges, out }) => {
            let net = load_network(&nodes, &edges)?;
            warn(&net);
            write_network(&net, &out)?;
            println!("nodes={} edges={}", net.nodes().len(), net.edges().len());
        }
        Command::Demand(DemandCommand::Gen {
            net,
            n,
            batch_s,
            seed,
            tau_origin_m,
            tau_dest_m,
            out,
        }) => {
            let net = read_network(&net)?;
            let mut cfg = DemandConfig::for_network(&net, n, seed);
            cfg.batch_length = batch_s;
            if let Some(t) = tau_origin_m {
                cfg.tau_origin = t;
            }
            if let Some(t) = tau_dest_m {
                cfg.tau_dest = t;
            }
            let requests = generate_demand(&net, &cfg)?;
            write_demand(&out, &requests)?;
            println!("requests={}", requests.len());
        }
        Command::Solve(args) => return solve(args),
        Command::Sweep(args) => {
            if args.jobs == 0 {
                return Err(Error::config("--jobs", "must be at least 1"));
            }
            let cfg = SweepConfig::load(&args.config)?;
            let summary = run_sweep(&cfg, &args.out, args.resume, args.jobs)?;
            println!(
                "written={} skipped={} aborted={} timed_out={}",
                summary.written, summary.skipped, summary.aborted, summary.timed_out
            );
        }
        Command::Theory(args) => {
            let mut text = String::from("q,d,exact,log10\n");
            for &q in &args.q_list {
                for &d in &args.d_list {
                    let s = theoretical_search_space(q, d);
                    text.push_str(&format!("{q},{d},{s},{:.3}\n", log10_big(&s)));
                }
            }
            match &args.out {
                Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e))?,
                None => print!("{text}"),
            }
        }
        Command::Report(args) => {
            let summary = report(&args.results, &args.out_dir)?;
            print!("{summary}");
        }
    }
    Ok(0)
}

fn solve(args: SolveArgs) -> Result<i32> {
    if args.max_degree == 0 || args.max_degree > MAX_DEGREE {
        return Err(Error::config("--max-degree", format!("must be in 1..={MAX_DEGREE}")));
    }
    let base = match &args.params_file {
        Some(path) => load_params(path)?,
        None => BehavioralParams::default(),
    };
    let params = base.with_lambda(args.lambda);
    params.validate()?;
    let net = read_network(&args.net)?;
    let requests = read_demand(&args.demand)?;
    for r in &requests {
        for node in [r.origin, r.destination] {
            if !net.contains(node) {
                return Err(Error::config(
                    "--demand",
                    format!("request {} uses node {node} missing from the network", r.id),
                ));
            }
        }
    }

    let mut guard = GuardLimits::default();
    if let Some(v) = args.guard_max_avg_degree {
        guard.max_avg_degree = v;
    }
    if let Some(v) = args.guard_max_rides_per_degree {
        guard.max_rides_per_degree = v;
    }
    let mut endpoints: Vec<u64> = requests.iter().flat_map(|r| [r.origin, r.destination]).collect();
    endpoints.sort_unstable();
    endpoints.dedup();
    let skim = net.build_skim(&endpoints)?;
    let opts = EnumerationOptions {
        max_degree: args.max_degree,
        guard: Some(guard),
        ..EnumerationOptions::default()
    };
    let enumeration = enumerate_all(&requests, &skim, &params, &opts)?;

    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    write_rides(&args.out_dir.join("rides.csv"), &enumeration.rides)?;
    let mut trace = enumeration.trace;
    let stats = graph_stats(&enumeration.graph);
    let mut line = format!(
        "requests={} rides={} search_space={} avg_degree={:.3}",
        requests.len(),
        enumeration.rides.len(),
        trace.search_space(),
        stats.avg_degree
    );
    let code = match &trace.status {
        RunStatus::Completed => {
            let ids = requests.iter().map(|r| r.id).collect();
            let problem = MatchingProblem::from_rides(ids, &enumeration.rides)?;
            let clock = std::time::Instant::now();
            let solution = solve_exact(&problem);
            let m = trace.stage_mut(crate::metrics::Stage::Matching);
            m.candidates_explored = problem.columns().len() as u64;
            m.rides_retained = solution.selected.len() as u64;
            m.logical_memory = logical_memory(problem.columns().len() as u64, enumeration.graph.edge_count() as u64);
            m.elapsed_ms = clock.elapsed().as_secs_f64() * 1e3;
            write_solution(&args.out_dir.join("solution.csv"), &problem, &solution)?;
            let k = kpis(&requests, &solution, &params);
            line.push_str(&format!(
                " objective={:.6} share_pooled={:.4} rel_utility_gain={:.6} status=completed",
                solution.objective, k.share_pooled, k.rel_utility_gain
            ));
            0
        }
        status => {
            line.push_str(&format!(" status={} ({})", status.label(), status.detail()));
            3
        }
    };
    write_trace(&args.out_dir.join("trace.csv"), &trace)?;
    println!("{line}");
    let _ = std::io::stdout().flush();
    Ok(code)
}

fn read_network(dir: &Path) -> Result<Network> {
    let net = load_network(&dir.join(NODES_FILE), &dir.join(EDGES_FILE))?;
    warn(&net);
    Ok(net)
}

fn write_network(net: &Network, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_network(net, &dir.join(NODES_FILE), &dir.join(EDGES_FILE))
}

fn warn(net: &Network) {
    for w in net.warnings() {
        eprintln!("warning: {w}");
    }
}
