//! Energy- and transfer-constrained multi-modal routing.
//!
//! Requests are solved on a mode-expanded graph whose states are
//! `(edge, mode)` pairs: a traveller in state `(e, m)` stands at the
//! downstream end of edge `e` using mode `m`. Travel arcs move along the
//! network inside one mode layer; transfer arcs switch between walking and a
//! shared vehicle at eHub stations. A trip starts in `(origin, Walk)` and ends
//! in `(destination, Walk)`, so vehicles are always docked before arrival.
//!
//! Times and energies are accumulated in integer micro-units so that the
//! label-setting solver and the exhaustive oracle agree bit for bit.

mod benchmark;
mod commit;
mod energy;
mod expand;
pub mod fixtures;
mod oracle;
mod solver;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{AgentClass, Edge, NetworkGraph, PerClass, TransportMode};
use crate::sim::EdgeTrafficRecord;

pub use benchmark::{
    benchmark_snapshots, od_benchmark, sample_od_pairs, snapshot_at, BenchmarkError, BenchmarkOptions, BenchmarkReport,
    ExtraTime, Histogram, HistogramBin, PairResult, DEFAULT_SNAPSHOT_TIME_S,
};
pub use commit::{commit_route, CommitError, UserPathRecord};
pub use energy::{energy_cost, EnergyModelParams, ModeEnergy};
pub use expand::{expand_graph, Arc, ModeExpandedGraph, StateKey};
pub use oracle::brute_force_oracle;
pub use solver::solve_route;

pub const DEFAULT_MAX_TRANSFERS: u32 = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error("no route from `{origin}` to `{destination}` under the given constraints")]
    NoRoute { origin: String, destination: String },
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

fn default_max_transfers() -> u32 {
    DEFAULT_MAX_TRANSFERS
}

fn all_modes() -> Vec<TransportMode> {
    TransportMode::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteRequest {
    pub origin_edge: String,
    pub destination_edge: String,
    #[serde(default = "default_max_transfers")]
    pub max_transfers: u32,
    /// Walking is always allowed, whether listed or not.
    #[serde(default = "all_modes")]
    pub allowed_modes: Vec<TransportMode>,
    /// Per-mode budget in watt-hours; a missing mode is unconstrained.
    #[serde(default)]
    pub energy_budget_wh: BTreeMap<TransportMode, f64>,
}

impl RouteRequest {
    pub fn new(origin: impl Into<String>, destination: impl Into<String>) -> Self {
        RouteRequest {
            origin_edge: origin.into(),
            destination_edge: destination.into(),
            max_transfers: DEFAULT_MAX_TRANSFERS,
            allowed_modes: all_modes(),
            energy_budget_wh: BTreeMap::new(),
        }
    }

    pub fn walk_only(origin: impl Into<String>, destination: impl Into<String>) -> Self {
        RouteRequest { allowed_modes: vec![TransportMode::Walk], ..Self::new(origin, destination) }
    }

    /// Allowed modes, deduplicated and in canonical order, always with walking.
    pub fn modes(&self) -> Vec<TransportMode> {
        TransportMode::ALL
            .into_iter()
            .filter(|m| *m == TransportMode::Walk || self.allowed_modes.contains(m))
            .collect()
    }

    pub fn validate(&self, graph: &NetworkGraph) -> Result<(), RoutingError> {
        for id in [&self.origin_edge, &self.destination_edge] {
            if graph.edge_ix(id).is_none() {
                return Err(RoutingError::UnknownEdge(id.clone()));
            }
        }
        for (mode, budget) in &self.energy_budget_wh {
            if budget.is_nan() || *budget < 0.0 {
                return Err(RoutingError::InvalidRequest(format!("energy budget for {mode} must be >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeLeg {
    pub mode: TransportMode,
    /// Edges traversed in this leg, in order.
    pub edges: Vec<String>,
    pub leg_time_s: f64,
    pub leg_energy_wh: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pickup_station: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dropoff_station: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutePlan {
    pub origin_edge: String,
    pub destination_edge: String,
    pub legs: Vec<ModeLeg>,
    pub total_time_s: f64,
    pub transfers: u32,
    /// Solver wall time.
    pub execution_time_ms: f64,
}

impl RoutePlan {
    /// `(edge,mode),(edge,mode),...` over every traversed edge.
    pub fn path_sequence(&self) -> String {
        let groups: Vec<String> = self
            .legs
            .iter()
            .flat_map(|leg| leg.edges.iter().map(move |e| format!("({e},{})", leg.mode)))
            .collect();
        groups.join(",")
    }

    /// Energy per vehicle mode over the whole plan.
    pub fn energy_by_mode(&self) -> BTreeMap<TransportMode, f64> {
        let mut out = BTreeMap::new();
        for leg in &self.legs {
            *out.entry(leg.mode).or_insert(0.0) += leg.leg_energy_wh;
        }
        out
    }

    /// Equality ignoring the measured solver time.
    pub fn same_route(&self, other: &RoutePlan) -> bool {
        RoutePlan { execution_time_ms: 0.0, ..self.clone() } == RoutePlan { execution_time_ms: 0.0, ..other.clone() }
    }

    /// Checks the transfer bound and every per-mode energy budget.
    pub fn satisfies(&self, request: &RouteRequest) -> bool {
        if self.transfers > request.max_transfers {
            return false;
        }
        if !self.legs.is_empty() && self.transfers as usize != self.legs.len() - 1 {
            return false;
        }
        self.energy_by_mode().iter().all(|(mode, used)| match request.energy_budget_wh.get(mode) {
            Some(budget) => *used <= *budget + 1e-9,
            None => true,
        })
    }
}

/// Current speed of a class on an edge; `None` or `0` means impassable.
pub trait SpeedLookup {
    fn speed(&self, edge: &Edge, class: AgentClass) -> Option<f64>;
}

/// Uncongested network.
#[derive(Debug, Clone, Copy, Default)]
pub struct FreeFlow;

impl SpeedLookup for FreeFlow {
    fn speed(&self, edge: &Edge, class: AgentClass) -> Option<f64> {
        edge.free_flow_speed(class)
    }
}

/// Speeds of one aggregation window. Edges missing from the snapshot fall
/// back to free flow.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrafficSnapshot {
    pub simulation_time: i64,
    speeds: HashMap<String, PerClass<Option<f64>>>,
}

impl TrafficSnapshot {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a EdgeTrafficRecord>) -> Self {
        let mut snapshot = TrafficSnapshot::default();
        for r in records {
            snapshot.simulation_time = r.simulation_time;
            snapshot.speeds.insert(r.edge_id.clone(), PerClass::from_fn(|c| r.speed(c)));
        }
        snapshot
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    pub fn get(&self, edge_id: &str) -> Option<&PerClass<Option<f64>>> {
        self.speeds.get(edge_id)
    }

    pub fn set(&mut self, edge_id: impl Into<String>, class: AgentClass, speed: Option<f64>) {
        self.speeds.entry(edge_id.into()).or_default()[class] = speed;
    }
}

impl SpeedLookup for TrafficSnapshot {
    fn speed(&self, edge: &Edge, class: AgentClass) -> Option<f64> {
        match self.speeds.get(&edge.id) {
            Some(s) if edge.allows(class) => s[class],
            Some(_) => None,
            None => edge.free_flow_speed(class),
        }
    }
}

impl<S: SpeedLookup + ?Sized> SpeedLookup for &S {
    fn speed(&self, edge: &Edge, class: AgentClass) -> Option<f64> {
        (**self).speed(edge, class)
    }
}
