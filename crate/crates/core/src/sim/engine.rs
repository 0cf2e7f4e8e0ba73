use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{edge_speed, spawn_rate_at, SimError, TrafficLevel};
use crate::network::{AgentClass, Demand, EdgeIx, NetworkGraph, NodeIx, PerClass, ScenarioConfig};

/// Attempts at drawing a reachable destination before an agent is sent on a
/// single-edge trip.
const DESTINATION_DRAWS: usize = 8;

/// Per-edge speeds averaged over one aggregation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeTrafficRecord {
    pub edge_id: String,
    /// Window start, seconds since scenario start.
    pub simulation_time: i64,
    pub pedestrian_speed: Option<f64>,
    pub bike_speed: Option<f64>,
    pub car_speed: Option<f64>,
}

impl EdgeTrafficRecord {
    pub fn speed(&self, class: AgentClass) -> Option<f64> {
        match class {
            AgentClass::Pedestrian => self.pedestrian_speed,
            AgentClass::Bicycle => self.bike_speed,
            AgentClass::Car => self.car_speed,
        }
    }
}

/// Receives the records of each completed window, sorted by edge id.
pub trait RecordSink {
    fn consume(&mut self, window: &[EdgeTrafficRecord]) -> Result<(), SimError>;
}

impl RecordSink for Vec<EdgeTrafficRecord> {
    fn consume(&mut self, window: &[EdgeTrafficRecord]) -> Result<(), SimError> {
        self.extend_from_slice(window);
        Ok(())
    }
}

/// Newline-delimited JSON export.
pub struct JsonlSink<W: Write>(pub W);

impl<W: Write> RecordSink for JsonlSink<W> {
    fn consume(&mut self, window: &[EdgeTrafficRecord]) -> Result<(), SimError> {
        for r in window {
            serde_json::to_writer(&mut self.0, r).map_err(|e| SimError::Sink(e.to_string()))?;
            self.0.write_all(b"\n").map_err(|e| SimError::Sink(e.to_string()))?;
        }
        Ok(())
    }
}

/// Adapts a closure into a sink.
pub struct SinkFn<F>(pub F);

impl<F> RecordSink for SinkFn<F>
where
    F: FnMut(&[EdgeTrafficRecord]) -> Result<(), SimError>,
{
    fn consume(&mut self, window: &[EdgeTrafficRecord]) -> Result<(), SimError> {
        (self.0)(window)
    }
}

impl<S: RecordSink + ?Sized> RecordSink for &mut S {
    fn consume(&mut self, window: &[EdgeTrafficRecord]) -> Result<(), SimError> {
        (**self).consume(window)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Agent {
    class: AgentClass,
    path: Vec<EdgeIx>,
    leg: usize,
    remaining_m: f64,
}

/// Mutable simulation state. Only [`Simulator`] advances it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    clock_s: f64,
    counts: Vec<PerClass<u32>>,
    agents: Vec<Agent>,
    accumulators: PerClass<f64>,
    spawned: PerClass<u64>,
    arrived: PerClass<u64>,
    spawned_by_interval: PerClass<Vec<u64>>,
    rng: ChaCha8Rng,
}

impl SimState {
    pub fn clock_s(&self) -> f64 {
        self.clock_s
    }

    /// Agents of `class` currently on `edge`.
    pub fn count(&self, edge: EdgeIx, class: AgentClass) -> u32 {
        self.counts[edge][class]
    }

    pub fn agents_present(&self, class: AgentClass) -> usize {
        self.agents.iter().filter(|a| a.class == class).count()
    }

    pub fn total_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn spawned(&self, class: AgentClass) -> u64 {
        self.spawned[class]
    }

    pub fn arrived(&self, class: AgentClass) -> u64 {
        self.arrived[class]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSpawns {
    pub start_s: f64,
    pub end_s: f64,
    pub spawn_period_s: f64,
    /// `rate · (end − start)` including the level multiplier.
    pub expected: f64,
    pub spawned: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub agent_class: AgentClass,
    pub spawned: u64,
    pub arrived: u64,
    pub intervals: Vec<IntervalSpawns>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub traffic_level: TrafficLevel,
    pub duration_s: u32,
    pub windows: u32,
    pub edges: usize,
    pub records: u64,
    pub in_flight: usize,
    pub classes: Vec<ClassSummary>,
    pub wall_time_ms: f64,
}

impl SimulationSummary {
    pub fn class(&self, class: AgentClass) -> Option<&ClassSummary> {
        self.classes.iter().find(|c| c.agent_class == class)
    }
}

struct Dist(f64);

impl PartialEq for Dist {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Fraction of free-flow speed at which a jammed queue still discharges.
/// Only movement uses it; reported speeds follow the density law.
pub const CREEP_FRACTION: f64 = 0.05;

/// Advances [`SimState`] one tick at a time over a fixed network and demand.
pub struct Simulator<'g> {
    graph: &'g NetworkGraph,
    demand: Demand,
    multiplier: f64,
    class_edges: PerClass<Vec<EdgeIx>>,
    next_hop: HashMap<(AgentClass, NodeIx), Vec<Option<EdgeIx>>>,
    speeds: Vec<PerClass<Option<f64>>>,
}

impl<'g> Simulator<'g> {
    pub fn new(graph: &'g NetworkGraph, demand: &Demand, level: TrafficLevel) -> Self {
        let class_edges = PerClass::from_fn(|class| {
            (0..graph.edge_count()).filter(|&e| graph.edge(e).allows(class)).collect()
        });
        Simulator {
            graph,
            demand: demand.clone(),
            multiplier: demand.multipliers.get(level),
            class_edges,
            next_hop: HashMap::new(),
            speeds: vec![PerClass::default(); graph.edge_count()],
        }
    }

    pub fn from_config(graph: &'g NetworkGraph, config: &ScenarioConfig) -> Self {
        Self::new(graph, &config.demand, config.traffic_level)
    }

    pub fn initial_state(&self, seed: u64) -> SimState {
        SimState {
            clock_s: 0.0,
            counts: vec![PerClass::default(); self.graph.edge_count()],
            agents: Vec::new(),
            accumulators: PerClass::default(),
            spawned: PerClass::default(),
            arrived: PerClass::default(),
            spawned_by_interval: PerClass::from_fn(|c| {
                vec![0; self.demand.schedule(c).map_or(0, |s| s.intervals.len())]
            }),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Speeds used during the most recent step, per edge and class.
    pub fn last_speeds(&self) -> &[PerClass<Option<f64>>] {
        &self.speeds
    }

    /// Moves every agent by `dt` seconds at the speeds implied by the counts at
    /// the start of the step, removes arrivals, then spawns new agents from the
    /// demand accumulators. New agents start at the upstream end of a random
    /// permitted edge and follow a free-flow shortest path.
    pub fn step(&mut self, state: &mut SimState, dt: f64) -> Result<(), SimError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SimError::InvalidStep(format!("dt must be > 0, got {dt}")));
        }
        let graph = self.graph;
        for (e, edge) in graph.edges().iter().enumerate() {
            self.speeds[e] =
                PerClass::from_fn(|c| edge_speed(c, f64::from(state.counts[e][c]), edge));
        }

        let speeds = &self.speeds;
        let counts = &mut state.counts;
        let arrived = &mut state.arrived;
        state.agents.retain_mut(|agent| {
            let mut time_left = dt;
            loop {
                let edge = agent.path[agent.leg];
                let Some(law) = speeds[edge][agent.class] else {
                    return true;
                };
                let creep = graph.edge(edge).free_flow_speed(agent.class).unwrap_or(0.0) * CREEP_FRACTION;
                let v = law.max(creep);
                if v <= 0.0 {
                    return true;
                }
                let reach = v * time_left;
                if reach < agent.remaining_m {
                    agent.remaining_m -= reach;
                    return true;
                }
                time_left -= agent.remaining_m / v;
                counts[edge][agent.class] -= 1;
                agent.leg += 1;
                match agent.path.get(agent.leg) {
                    Some(&next) => {
                        counts[next][agent.class] += 1;
                        agent.remaining_m = graph.edge(next).length;
                    }
                    None => {
                        arrived[agent.class] += 1;
                        return false;
                    }
                }
            }
        });

        for class in AgentClass::ALL {
            let Some(schedule) = self.demand.schedule(class) else {
                continue;
            };
            if self.class_edges[class].is_empty() {
                continue;
            }
            let Some(interval) = schedule.intervals.iter().position(|i| i.contains(state.clock_s)) else {
                continue;
            };
            let rate = spawn_rate_at(schedule, state.clock_s, self.multiplier)?;
            state.accumulators[class] += rate * dt;
            while state.accumulators[class] >= 1.0 {
                state.accumulators[class] -= 1.0;
                let path = self.sample_path(class, &mut state.rng);
                let first = path[0];
                state.counts[first][class] += 1;
                state.agents.push(Agent {
                    class,
                    remaining_m: graph.edge(first).length,
                    path,
                    leg: 0,
                });
                state.spawned[class] += 1;
                state.spawned_by_interval[class][interval] += 1;
            }
        }

        state.clock_s += dt;
        Ok(())
    }

    fn sample_path(&mut self, class: AgentClass, rng: &mut ChaCha8Rng) -> Vec<EdgeIx> {
        let candidates = &self.class_edges[class];
        let origin = candidates[rng.gen_range(0..candidates.len())];
        for _ in 0..DESTINATION_DRAWS {
            let dest = self.class_edges[class][rng.gen_range(0..self.class_edges[class].len())];
            if let Some(path) = self.free_flow_path(class, origin, dest) {
                return path;
            }
        }
        vec![origin]
    }

    /// Free-flow shortest edge path from `origin` to `dest`, both included.
    fn free_flow_path(&mut self, class: AgentClass, origin: EdgeIx, dest: EdgeIx) -> Option<Vec<EdgeIx>> {
        if origin == dest {
            return Some(vec![origin]);
        }
        let graph = self.graph;
        let target = graph.edge(dest).from;
        let hops = self.next_hop.entry((class, target)).or_insert_with(|| next_hops(graph, class, target));
        let mut path = vec![origin];
        let mut node = graph.edge(origin).to;
        while node != target {
            let e = hops[node]?;
            path.push(e);
            node = graph.edge(e).to;
            if path.len() > graph.edge_count() + 1 {
                return None;
            }
        }
        path.push(dest);
        Some(path)
    }
}

/// For every node, the first edge of a free-flow shortest path to `target`.
fn next_hops(graph: &NetworkGraph, class: AgentClass, target: NodeIx) -> Vec<Option<EdgeIx>> {
    let n = graph.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut hop = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[target] = 0.0;
    heap.push(Reverse((Dist(0.0), target)));
    while let Some(Reverse((Dist(d), node))) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &e in graph.incoming(node) {
            let edge = graph.edge(e);
            let Some(v) = edge.free_flow_speed(class) else {
                continue;
            };
            let nd = d + edge.length / v;
            if nd < dist[edge.from] {
                dist[edge.from] = nd;
                hop[edge.from] = Some(e);
                heap.push(Reverse((Dist(nd), edge.from)));
            }
        }
    }
    hop
}

/// Runs a whole scenario, emitting one record per edge and aggregation window.
/// Speeds are time-weighted means over the window of the per-tick speeds.
pub fn run_scenario<S: RecordSink>(
    graph: &NetworkGraph,
    config: &ScenarioConfig,
    mut sink: S,
) -> Result<SimulationSummary, SimError> {
    let started = Instant::now();
    let mut sim = Simulator::from_config(graph, config);
    let mut state = sim.initial_state(config.seed);
    let window = config.aggregation_window_s;
    let mut order: Vec<EdgeIx> = (0..graph.edge_count()).collect();
    order.sort_by(|&a, &b| graph.edge(a).id.cmp(&graph.edge(b).id));

    // Per-class speed deficit below free flow, summed over the window's ticks.
    let mut sums = vec![PerClass::<f64>::default(); graph.edge_count()];
    let mut records_emitted = 0u64;
    let mut batch = Vec::with_capacity(graph.edge_count());
    for w in 0..config.window_count() {
        for s in sums.iter_mut() {
            *s = PerClass::default();
        }
        for _ in 0..window {
            sim.step(&mut state, 1.0)?;
            for (e, (sum, speeds)) in sums.iter_mut().zip(sim.last_speeds()).enumerate() {
                for class in AgentClass::ALL {
                    if let (Some(v), Some(vf)) = (speeds[class], graph.edge(e).free_flow_speed(class)) {
                        sum[class] += vf - v;
                    }
                }
            }
        }
        batch.clear();
        for &e in &order {
            let edge = graph.edge(e);
            let mean = |class: AgentClass| {
                edge.free_flow_speed(class)
                    .map(|vf| (vf - sums[e][class] / f64::from(window)).clamp(0.0, vf))
            };
            batch.push(EdgeTrafficRecord {
                edge_id: edge.id.clone(),
                simulation_time: i64::from(w * window),
                pedestrian_speed: mean(AgentClass::Pedestrian),
                bike_speed: mean(AgentClass::Bicycle),
                car_speed: mean(AgentClass::Car),
            });
        }
        sink.consume(&batch)?;
        records_emitted += batch.len() as u64;
    }

    let multiplier = config.demand.multipliers.get(config.traffic_level);
    let classes = AgentClass::ALL
        .into_iter()
        .map(|class| ClassSummary {
            agent_class: class,
            spawned: state.spawned(class),
            arrived: state.arrived(class),
            intervals: config
                .demand
                .schedule(class)
                .map(|s| {
                    s.intervals
                        .iter()
                        .zip(&state.spawned_by_interval[class])
                        .map(|(i, &spawned)| IntervalSpawns {
                            start_s: i.start_s,
                            end_s: i.end_s,
                            spawn_period_s: i.spawn_period_s,
                            expected: multiplier * i.duration_s() / i.spawn_period_s,
                            spawned,
                        })
                        .collect()
                })
                .unwrap_or_default(),
        })
        .collect();

    Ok(SimulationSummary {
        traffic_level: config.traffic_level,
        duration_s: config.duration_s,
        windows: config.window_count(),
        edges: graph.edge_count(),
        records: records_emitted,
        in_flight: state.total_agents(),
        classes,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}
