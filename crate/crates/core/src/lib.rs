//! Ride-pooling search-space benchmarking.
//!
//! The pipeline runs from a road network ([`netgraph`]) and seeded demand
//! ([`demand`]) through utility-filtered ride enumeration ([`exmas`]) to an
//! exact set-partitioning match ([`matching`]), with complexity indicators
//! ([`metrics`]) recorded at every stage. [`experiment`] sweeps the pipeline
//! over demand levels and discounts and writes resumable CSV results.

pub mod cli;
pub mod config;
pub mod demand;
pub mod error;
pub mod exmas;
pub mod experiment;
pub mod matching;
pub mod metrics;
pub mod netgraph;

pub use demand::{generate_demand, DemandConfig, TripRequest};
pub use error::{Error, Result};
pub use exmas::{enumerate_all, BehavioralParams, EnumerationOptions, Ride, RideSet, ShareabilityGraph};
pub use matching::{solve_exact, solve_greedy, MatchingProblem, MatchingSolution};
pub use metrics::{theoretical_search_space, ComplexityTrace, GraphStats, GuardLimits, Kpis};
pub use netgraph::{generate_grid, load_network, Network, SkimMatrix};
