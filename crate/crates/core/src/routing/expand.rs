use std::collections::BTreeMap;

use serde::Serialize;

use super::{energy_cost, EnergyModelParams, RouteRequest, RoutingError, SpeedLookup};
use crate::network::{EdgeIx, NetworkGraph, TransportMode};
use crate::stations::Station;

const MODES: usize = TransportMode::ALL.len();

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct StateKey {
    pub edge: EdgeIx,
    pub mode: TransportMode,
}

impl StateKey {
    pub fn new(edge: EdgeIx, mode: TransportMode) -> Self {
        StateKey { edge, mode }
    }

    pub(super) fn index(self) -> usize {
        self.edge * MODES + self.mode.index()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub from: StateKey,
    pub to: StateKey,
    /// microseconds
    pub time_us: u64,
    /// micro-watt-hours
    pub energy_uwh: u64,
    pub transfer: bool,
    /// Station used by a transfer arc, index into [`ModeExpandedGraph::station_id`].
    pub station: Option<usize>,
}

/// Layered routing graph for one request and one traffic snapshot.
#[derive(Debug, Clone)]
pub struct ModeExpandedGraph {
    modes: Vec<TransportMode>,
    edge_ids: Vec<String>,
    edge_rank: Vec<u32>,
    station_ids: Vec<String>,
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
    origin: EdgeIx,
    destination: EdgeIx,
    max_transfers: u32,
    budgets_uwh: [Option<u64>; MODES],
}

/// Speeds below this (m/s) count as jammed and the edge is not traversable.
pub const MIN_SPEED: f64 = 1e-3;

pub(super) fn to_micros(seconds: f64) -> u64 {
    ((seconds * 1e6).round() as u64).max(1)
}

pub(super) fn wh_to_micro(wh: f64) -> u64 {
    (wh * 1e6).round() as u64
}

impl ModeExpandedGraph {
    pub fn modes(&self) -> &[TransportMode] {
        &self.modes
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arcs_from(&self, state: StateKey) -> impl Iterator<Item = &Arc> {
        self.out[state.index()].iter().map(move |&a| &self.arcs[a])
    }

    /// Indices into [`Self::arcs`] of the arcs leaving `state`.
    pub fn out_arcs(&self, state: StateKey) -> &[usize] {
        &self.out[state.index()]
    }

    pub fn transfer_arcs_at(&self, edge: EdgeIx) -> Vec<&Arc> {
        self.arcs.iter().filter(|a| a.transfer && a.from.edge == edge).collect()
    }

    pub fn travel_arc_count(&self) -> usize {
        self.arcs.iter().filter(|a| !a.transfer).count()
    }

    pub fn origin(&self) -> StateKey {
        StateKey::new(self.origin, TransportMode::Walk)
    }

    pub fn goal(&self) -> StateKey {
        StateKey::new(self.destination, TransportMode::Walk)
    }

    pub fn state_slots(&self) -> usize {
        self.out.len()
    }

    pub fn edge_id(&self, edge: EdgeIx) -> &str {
        &self.edge_ids[edge]
    }

    /// Position of the edge id in lexicographic order.
    pub fn edge_rank(&self, edge: EdgeIx) -> u32 {
        self.edge_rank[edge]
    }

    pub fn station_id(&self, ix: usize) -> &str {
        &self.station_ids[ix]
    }

    pub fn max_transfers(&self) -> u32 {
        self.max_transfers
    }

    pub fn budget_uwh(&self, mode: TransportMode) -> Option<u64> {
        self.budgets_uwh[mode.index()]
    }
}

/// Builds the mode-expanded graph.
///
/// * One layer per allowed mode. A vehicle layer is kept only if at least
///   one station offers that vehicle.
/// * Travel arc `(e, m) → (f, m)` for each successor `f` of `e` whose current
///   speed for `m`'s class is positive; weight `length / speed`.
/// * Pickup arc `(s, Walk) → (s, m)` where a station on `s` holds a charged
///   vehicle of mode `m`; dropoff arc `(s, m) → (s, Walk)` where a station on
///   `s` has a free dock.
pub fn expand_graph<S: SpeedLookup>(
    graph: &NetworkGraph,
    stations: &[Station],
    request: &RouteRequest,
    traffic: &S,
    energy: &EnergyModelParams,
) -> Result<ModeExpandedGraph, RoutingError> {
    request.validate(graph)?;
    let requested = request.modes();

    let mut station_ids = Vec::new();
    let mut by_edge: BTreeMap<EdgeIx, Vec<usize>> = BTreeMap::new();
    for s in stations {
        let e = graph.edge_ix(&s.edge_id).ok_or_else(|| RoutingError::UnknownEdge(s.edge_id.clone()))?;
        by_edge.entry(e).or_default().push(station_ids.len());
        station_ids.push(s.station_id.clone());
    }

    let has_vehicle = |ix: usize, mode: TransportMode| {
        mode.vehicle().is_some_and(|v| stations[ix].inventory.iter().any(|u| u.vehicle_type == v && u.battery_level > 0.0))
    };
    let modes: Vec<TransportMode> = requested
        .into_iter()
        .filter(|&m| m == TransportMode::Walk || by_edge.values().flatten().any(|&ix| has_vehicle(ix, m)))
        .collect();

    let n = graph.edge_count();
    let mut order: Vec<EdgeIx> = (0..n).collect();
    order.sort_by(|&a, &b| graph.edge(a).id.cmp(&graph.edge(b).id));
    let mut edge_rank = vec![0u32; n];
    for (rank, &e) in order.iter().enumerate() {
        edge_rank[e] = rank as u32;
    }

    let mut arcs = Vec::new();
    for &mode in &modes {
        let class = mode.agent_class();
        for e in 0..n {
            for &f in graph.successors(e) {
                let edge = graph.edge(f);
                let Some(v) = traffic.speed(edge, class).filter(|v| *v >= MIN_SPEED && v.is_finite()) else {
                    continue;
                };
                arcs.push(Arc {
                    from: StateKey::new(e, mode),
                    to: StateKey::new(f, mode),
                    time_us: to_micros(edge.length / v),
                    energy_uwh: wh_to_micro(energy_cost(edge, mode, v, energy)),
                    transfer: false,
                    station: None,
                });
            }
        }
    }

    for (&e, local) in &by_edge {
        for &mode in modes.iter().filter(|m| **m != TransportMode::Walk) {
            if let Some(&ix) = local.iter().find(|&&ix| has_vehicle(ix, mode)) {
                arcs.push(Arc {
                    from: StateKey::new(e, TransportMode::Walk),
                    to: StateKey::new(e, mode),
                    time_us: 0,
                    energy_uwh: 0,
                    transfer: true,
                    station: Some(ix),
                });
            }
            if let Some(&ix) = local.iter().find(|&&ix| stations[ix].has_free_dock()) {
                arcs.push(Arc {
                    from: StateKey::new(e, mode),
                    to: StateKey::new(e, TransportMode::Walk),
                    time_us: 0,
                    energy_uwh: 0,
                    transfer: true,
                    station: Some(ix),
                });
            }
        }
    }

    let mut out = vec![Vec::new(); n * MODES];
    for (ix, arc) in arcs.iter().enumerate() {
        out[arc.from.index()].push(ix);
    }

    let mut budgets_uwh = [None; MODES];
    for (mode, wh) in &request.energy_budget_wh {
        budgets_uwh[mode.index()] = Some(wh_to_micro(*wh));
    }

    Ok(ModeExpandedGraph {
        modes,
        edge_ids: graph.edges().iter().map(|e| e.id.clone()).collect(),
        edge_rank,
        station_ids,
        arcs,
        out,
        origin: graph.edge_ix(&request.origin_edge).expect("validated"),
        destination: graph.edge_ix(&request.destination_edge).expect("validated"),
        max_transfers: request.max_transfers,
        budgets_uwh,
    })
}
