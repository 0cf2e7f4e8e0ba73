use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::expand::StateKey;
use super::{ModeExpandedGraph, ModeLeg, RoutePlan, RouteRequest, RoutingError};
use crate::network::TransportMode;

const MODES: usize = TransportMode::ALL.len();

/// Total order on partial paths: time, then transfers, then the traversed
/// `(edge rank, mode)` sequence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(super) struct PathKey {
    pub time_us: u64,
    pub transfers: u32,
    pub seq: Vec<(u32, u8)>,
}

impl PathKey {
    pub fn origin() -> Self {
        PathKey { time_us: 0, transfers: 0, seq: Vec::new() }
    }
}

/// Resource consumption of a partial path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub(super) struct Usage {
    pub energy_uwh: [u64; MODES],
}

impl Usage {
    pub fn within(&self, xg: &ModeExpandedGraph) -> bool {
        TransportMode::ALL
            .iter()
            .all(|m| xg.budget_uwh(*m).is_none_or(|b| self.energy_uwh[m.index()] <= b))
    }
}

/// Extends `key`/`usage` along `arc`, or `None` when a constraint breaks.
pub(super) fn extend(
    xg: &ModeExpandedGraph,
    key: &PathKey,
    usage: &Usage,
    arc: &super::Arc,
) -> Option<(PathKey, Usage)> {
    let mut next = key.clone();
    let mut used = *usage;
    next.time_us = next.time_us.saturating_add(arc.time_us);
    if arc.transfer {
        next.transfers += 1;
        if next.transfers > xg.max_transfers() {
            return None;
        }
    } else {
        next.seq.push((xg.edge_rank(arc.to.edge), arc.to.mode.index() as u8));
        used.energy_uwh[arc.to.mode.index()] = used.energy_uwh[arc.to.mode.index()].saturating_add(arc.energy_uwh);
        if !used.within(xg) {
            return None;
        }
    }
    Some((next, used))
}

/// Turns an arc sequence from the origin state into a plan.
pub(super) fn build_plan(xg: &ModeExpandedGraph, request: &RouteRequest, arcs: &[&super::Arc]) -> RoutePlan {
    let mut legs: Vec<ModeLeg> = Vec::new();
    let mut total_us = 0u64;
    let mut leg_us = 0u64;
    let mut leg_uwh = 0u64;
    let new_leg = |mode| ModeLeg {
        mode,
        edges: Vec::new(),
        leg_time_s: 0.0,
        leg_energy_wh: 0.0,
        pickup_station: None,
        dropoff_station: None,
    };
    if !arcs.is_empty() {
        legs.push(new_leg(TransportMode::Walk));
    }
    for arc in arcs {
        total_us += arc.time_us;
        if arc.transfer {
            let station = arc.station.map(|s| xg.station_id(s).to_string());
            let current = legs.last_mut().expect("leg open");
            current.leg_time_s = leg_us as f64 / 1e6;
            current.leg_energy_wh = leg_uwh as f64 / 1e6;
            if current.mode != TransportMode::Walk {
                current.dropoff_station = station.clone();
            }
            let mut next = new_leg(arc.to.mode);
            if arc.to.mode != TransportMode::Walk {
                next.pickup_station = station;
            }
            legs.push(next);
            leg_us = 0;
            leg_uwh = 0;
        } else {
            leg_us += arc.time_us;
            leg_uwh += arc.energy_uwh;
            legs.last_mut().expect("leg open").edges.push(xg.edge_id(arc.to.edge).to_string());
        }
    }
    if let Some(last) = legs.last_mut() {
        last.leg_time_s = leg_us as f64 / 1e6;
        last.leg_energy_wh = leg_uwh as f64 / 1e6;
    }
    RoutePlan {
        origin_edge: request.origin_edge.clone(),
        destination_edge: request.destination_edge.clone(),
        transfers: legs.len().saturating_sub(1) as u32,
        legs,
        total_time_s: total_us as f64 / 1e6,
        execution_time_ms: 0.0,
    }
}

pub(super) fn no_route(request: &RouteRequest) -> RoutingError {
    RoutingError::NoRoute { origin: request.origin_edge.clone(), destination: request.destination_edge.clone() }
}

struct Label {
    state: StateKey,
    key: PathKey,
    usage: Usage,
    parent: Option<(usize, usize)>,
    alive: bool,
}

#[derive(PartialEq, Eq)]
struct Queued {
    key: PathKey,
    label: usize,
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.cmp(&self.key).then_with(|| other.label.cmp(&self.label))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dominates(xg: &ModeExpandedGraph, a: &Label, b: &Label) -> bool {
    a.key.time_us <= b.key.time_us
        && a.key.transfers <= b.key.transfers
        && TransportMode::ALL.iter().all(|m| {
            xg.budget_uwh(*m).is_none() || a.usage.energy_uwh[m.index()] <= b.usage.energy_uwh[m.index()]
        })
        && a.key <= b.key
}

/// Exact minimum-time route by label setting.
///
/// Labels carry elapsed time, transfers used and energy per budgeted mode.
/// They are expanded in increasing `(time, transfers, sequence)` order, a
/// label is discarded when another label at the same state is no worse in
/// every resource and in that order, and the first goal label popped is the
/// optimum under the tie-break.
pub fn solve_route(request: &RouteRequest, xg: &ModeExpandedGraph) -> Result<RoutePlan, RoutingError> {
    let started = Instant::now();
    let mut labels: Vec<Label> = Vec::new();
    let mut at_state: Vec<Vec<usize>> = vec![Vec::new(); xg.state_slots()];
    let mut heap = BinaryHeap::new();

    let origin = xg.origin();
    labels.push(Label { state: origin, key: PathKey::origin(), usage: Usage::default(), parent: None, alive: true });
    at_state[origin.index()].push(0);
    heap.push(Queued { key: PathKey::origin(), label: 0 });

    let goal = xg.goal();
    while let Some(Queued { label, .. }) = heap.pop() {
        if !labels[label].alive {
            continue;
        }
        let state = labels[label].state;
        if state == goal {
            let mut arcs = Vec::new();
            let mut cursor = label;
            while let Some((parent, arc)) = labels[cursor].parent {
                arcs.push(&xg.arcs()[arc]);
                cursor = parent;
            }
            arcs.reverse();
            let mut plan = build_plan(xg, request, &arcs);
            plan.execution_time_ms = started.elapsed().as_secs_f64() * 1e3;
            return Ok(plan);
        }
        for &arc_ix in xg.out_arcs(state) {
            let arc = &xg.arcs()[arc_ix];
            let Some((key, usage)) = extend(xg, &labels[label].key, &labels[label].usage, arc) else {
                continue;
            };
            let candidate = Label { state: arc.to, key, usage, parent: Some((label, arc_ix)), alive: true };
            let slot = arc.to.index();
            if at_state[slot].iter().any(|&o| labels[o].alive && dominates(xg, &labels[o], &candidate)) {
                continue;
            }
            for &o in &at_state[slot] {
                if labels[o].alive && dominates(xg, &candidate, &labels[o]) {
                    labels[o].alive = false;
                }
            }
            at_state[slot].retain(|&o| labels[o].alive);
            let ix = labels.len();
            heap.push(Queued { key: candidate.key.clone(), label: ix });
            labels.push(candidate);
            at_state[slot].push(ix);
        }
    }
    Err(no_route(request))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{AgentClass, NetworkGraph};
    use crate::routing::fixtures::scooter_detour;
    use crate::routing::{brute_force_oracle, expand_graph, EnergyModelParams, FreeFlow, TrafficSnapshot};

    fn solve_both(request: &RouteRequest) -> (Result<RoutePlan, RoutingError>, Result<RoutePlan, RoutingError>) {
        let (graph, stations) = scooter_detour();
        let xg = expand_graph(&graph, &stations, request, &FreeFlow, &EnergyModelParams::default()).unwrap();
        (solve_route(request, &xg), brute_force_oracle(request, &xg))
    }

    #[test]
    fn origin_equals_destination() {
        let (plan, oracle) = solve_both(&RouteRequest::new("a", "a"));
        let plan = plan.unwrap();
        assert!(plan.legs.is_empty());
        assert_eq!(plan.total_time_s, 0.0);
        assert_eq!(plan.transfers, 0);
        assert!(plan.same_route(&oracle.unwrap()));
    }

    #[test]
    fn scooter_plan_beats_walking() {
        let (walk, _) = solve_both(&RouteRequest::walk_only("o", "c"));
        assert_eq!(walk.unwrap().total_time_s, 900.0);
        let request = RouteRequest::new("o", "c");
        let (plan, oracle) = solve_both(&request);
        let plan = plan.unwrap();
        assert_eq!(plan.total_time_s, 410.0);
        assert_eq!(plan.transfers, 2);
        let modes: Vec<TransportMode> = plan.legs.iter().map(|l| l.mode).collect();
        assert_eq!(modes, vec![TransportMode::Walk, TransportMode::EScooter, TransportMode::Walk]);
        assert_eq!(plan.legs[1].pickup_station.as_deref(), Some("S1"));
        assert_eq!(plan.legs[1].dropoff_station.as_deref(), Some("S2"));
        assert!((plan.legs[1].leg_energy_wh - 15.0 * 0.69).abs() < 1e-6);
        assert!(plan.satisfies(&request));
        assert!(plan.same_route(&oracle.unwrap()));
    }

    #[test]
    fn transfer_bound_and_budget_respected() {
        let one = RouteRequest { max_transfers: 1, ..RouteRequest::new("o", "c") };
        assert_eq!(solve_both(&one).0.unwrap().total_time_s, 900.0);
        let mut tight = RouteRequest::new("o", "c");
        tight.energy_budget_wh.insert(TransportMode::EScooter, 10.0);
        let (plan, oracle) = solve_both(&tight);
        assert_eq!(plan.unwrap().total_time_s, 900.0);
        assert_eq!(oracle.unwrap().total_time_s, 900.0);
    }

    #[test]
    fn unreachable_is_no_route() {
        let text = r#"{"type":"node","id":"a"}
{"type":"node","id":"b"}
{"type":"node","id":"c"}
{"type":"node","id":"d"}
{"type":"edge","id":"x","from":"a","to":"b","length":10,"classes":{"pedestrian":{"free_flow_speed":1,"jam_density":1}}}
{"type":"edge","id":"y","from":"c","to":"d","length":10,"classes":{"pedestrian":{"free_flow_speed":1,"jam_density":1}}}
"#;
        let graph = NetworkGraph::from_jsonl(text).unwrap();
        let req = RouteRequest::walk_only("x", "y");
        let xg = expand_graph(&graph, &[], &req, &FreeFlow, &EnergyModelParams::default()).unwrap();
        assert!(matches!(solve_route(&req, &xg), Err(RoutingError::NoRoute { .. })));
        assert!(matches!(brute_force_oracle(&req, &xg), Err(RoutingError::NoRoute { .. })));
    }

    #[test]
    fn faster_edge_never_hurts() {
        let (graph, stations) = scooter_detour();
        let req = RouteRequest::new("o", "c");
        let mut snap = TrafficSnapshot::default();
        snap.set("b", AgentClass::Bicycle, Some(1.0));
        let slow = expand_graph(&graph, &stations, &req, &snap, &EnergyModelParams::default()).unwrap();
        let slow_time = solve_route(&req, &slow).unwrap().total_time_s;
        snap.set("b", AgentClass::Bicycle, Some(2.0));
        let fast = expand_graph(&graph, &stations, &req, &snap, &EnergyModelParams::default()).unwrap();
        assert!(solve_route(&req, &fast).unwrap().total_time_s <= slow_time);
    }

    #[test]
    fn tie_prefers_lexicographic_sequence() {
        // Two parallel 100 m edges from n1 to n2; `p` sorts before `q`.
        let text = r#"{"type":"node","id":"n0"}
{"type":"node","id":"n1"}
{"type":"node","id":"n2"}
{"type":"edge","id":"o","from":"n0","to":"n1","length":10,"classes":{"pedestrian":{"free_flow_speed":1,"jam_density":1}}}
{"type":"edge","id":"q","from":"n1","to":"n2","length":100,"classes":{"pedestrian":{"free_flow_speed":1,"jam_density":1}}}
{"type":"edge","id":"p","from":"n1","to":"n2","length":100,"classes":{"pedestrian":{"free_flow_speed":1,"jam_density":1}}}
{"type":"edge","id":"d","from":"n2","to":"n0","length":10,"classes":{"pedestrian":{"free_flow_speed":1,"jam_density":1}}}
"#;
        let graph = NetworkGraph::from_jsonl(text).unwrap();
        let req = RouteRequest::walk_only("o", "d");
        let xg = expand_graph(&graph, &[], &req, &FreeFlow, &EnergyModelParams::default()).unwrap();
        let plan = solve_route(&req, &xg).unwrap();
        assert_eq!(plan.path_sequence(), "(p,walk),(d,walk)");
        assert!(plan.same_route(&brute_force_oracle(&req, &xg).unwrap()));
    }
}
