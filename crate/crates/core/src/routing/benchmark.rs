use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{expand_graph, solve_route, EnergyModelParams, RouteRequest, RoutingError, TrafficSnapshot};
use crate::network::{NetworkGraph, ScenarioConfig};
use crate::sim::{run_scenario, EdgeTrafficRecord, SimError, TrafficLevel};
use crate::stations::{place_stations, Station, StationError};

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Station(#[from] StationError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error("invalid benchmark options: {0}")]
    InvalidOptions(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkOptions {
    pub pairs: usize,
    /// The first level is the baseline for extra-time arrays.
    pub levels: Vec<TrafficLevel>,
    pub seed: u64,
    /// Routing uses the latest window completed by this time; defaults to
    /// the start of the morning peak, capped at the scenario duration.
    pub snapshot_time_s: Option<i64>,
    pub max_transfers: u32,
    pub bin_width_s: f64,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        BenchmarkOptions {
            pairs: 400,
            levels: TrafficLevel::ALL.to_vec(),
            seed: 42,
            snapshot_time_s: None,
            max_transfers: super::DEFAULT_MAX_TRANSFERS,
            bin_width_s: 30.0,
        }
    }
}

pub const DEFAULT_SNAPSHOT_TIME_S: i64 = 21_600;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub origin_edge: String,
    pub destination_edge: String,
    /// `None` when no route exists at that level.
    pub time_s: BTreeMap<TrafficLevel, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower_s: f64,
    pub upper_s: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width_s: f64,
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    /// Fixed-width bins aligned to multiples of `width`, covering every value.
    pub fn new(values: &[f64], width: f64) -> Self {
        let Some(min) = values.iter().copied().reduce(f64::min) else {
            return Histogram { bin_width_s: width, bins: Vec::new() };
        };
        let max = values.iter().copied().fold(min, f64::max);
        let first = (min / width).floor() as i64;
        let last = (max / width).floor() as i64;
        let mut bins: Vec<HistogramBin> = (first..=last)
            .map(|k| HistogramBin { lower_s: k as f64 * width, upper_s: (k + 1) as f64 * width, count: 0 })
            .collect();
        for v in values {
            let k = ((v / width).floor() as i64 - first) as usize;
            bins[k].count += 1;
        }
        Histogram { bin_width_s: width, bins }
    }

    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }
}

/// Extra travel time of `level` over `baseline`, per pair routable at both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtraTime {
    pub level: TrafficLevel,
    pub baseline: TrafficLevel,
    pub values_s: Vec<f64>,
    pub mean_s: f64,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub seed: u64,
    pub pairs_requested: usize,
    pub snapshot_time_s: i64,
    pub levels: Vec<TrafficLevel>,
    pub pairs: Vec<PairResult>,
    /// Pairs without a route at one or more levels.
    pub excluded: usize,
    pub extra_time: Vec<ExtraTime>,
    pub wall_time_ms: f64,
}

impl BenchmarkReport {
    pub fn extra(&self, level: TrafficLevel) -> Option<&ExtraTime> {
        self.extra_time.iter().find(|e| e.level == level)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per pair with the travel time at every level.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("origin_edge,destination_edge");
        for level in &self.levels {
            let _ = write!(out, ",{}_time_s", level.as_str());
        }
        out.push('\n');
        for p in &self.pairs {
            let _ = write!(out, "{},{}", p.origin_edge, p.destination_edge);
            for level in &self.levels {
                match p.time_s.get(level).copied().flatten() {
                    Some(t) => {
                        let _ = write!(out, ",{t}");
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Latest window completed at `t` for a window length of `window_s`.
pub fn snapshot_at(records: &[EdgeTrafficRecord], window_s: u32, t: i64) -> Option<TrafficSnapshot> {
    let start = records
        .iter()
        .map(|r| r.simulation_time)
        .filter(|s| s + i64::from(window_s) <= t)
        .max()?;
    Some(TrafficSnapshot::from_records(records.iter().filter(|r| r.simulation_time == start)))
}

/// Seeded origin–destination pairs of distinct edges.
pub fn sample_od_pairs(graph: &NetworkGraph, pairs: usize, seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<&str> = graph.edges().iter().map(|e| e.id.as_str()).collect();
    if ids.len() < 2 {
        return Vec::new();
    }
    (0..pairs)
        .map(|_| {
            let mut two = ids.choose_multiple(&mut rng, 2);
            (two.next().unwrap().to_string(), two.next().unwrap().to_string())
        })
        .collect()
}

/// Routes the same pairs over one snapshot per level.
pub fn benchmark_snapshots(
    graph: &NetworkGraph,
    stations: &[Station],
    snapshots: &BTreeMap<TrafficLevel, TrafficSnapshot>,
    energy: &EnergyModelParams,
    options: &BenchmarkOptions,
    snapshot_time_s: i64,
) -> Result<BenchmarkReport, BenchmarkError> {
    let started = Instant::now();
    if options.levels.is_empty() || options.bin_width_s <= 0.0 {
        return Err(BenchmarkError::InvalidOptions("need at least one level and a positive bin width".into()));
    }
    let od = sample_od_pairs(graph, options.pairs, options.seed);
    let mut pairs = Vec::with_capacity(od.len());
    for (origin, destination) in od {
        let mut time_s = BTreeMap::new();
        for level in &options.levels {
            let snapshot = snapshots
                .get(level)
                .ok_or_else(|| BenchmarkError::InvalidOptions(format!("no snapshot for level {}", level.as_str())))?;
            let request = RouteRequest { max_transfers: options.max_transfers, ..RouteRequest::new(&origin, &destination) };
            let xg = expand_graph(graph, stations, &request, snapshot, energy)?;
            let time = match solve_route(&request, &xg) {
                Ok(plan) => Some(plan.total_time_s),
                Err(RoutingError::NoRoute { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            time_s.insert(*level, time);
        }
        pairs.push(PairResult { origin_edge: origin, destination_edge: destination, time_s });
    }

    let complete: Vec<&PairResult> = pairs.iter().filter(|p| p.time_s.values().all(Option::is_some)).collect();
    let baseline = options.levels[0];
    let extra_time = options.levels[1..]
        .iter()
        .map(|&level| {
            let values_s: Vec<f64> =
                complete.iter().map(|p| p.time_s[&level].unwrap() - p.time_s[&baseline].unwrap()).collect();
            let mean_s = if values_s.is_empty() { 0.0 } else { values_s.iter().sum::<f64>() / values_s.len() as f64 };
            ExtraTime { level, baseline, histogram: Histogram::new(&values_s, options.bin_width_s), values_s, mean_s }
        })
        .collect();

    Ok(BenchmarkReport {
        seed: options.seed,
        pairs_requested: options.pairs,
        snapshot_time_s,
        levels: options.levels.clone(),
        excluded: pairs.len() - complete.len(),
        pairs,
        extra_time,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Simulates the scenario once per level (same seed), takes the traffic
/// snapshot at the configured time and routes the same seeded OD pairs on
/// each.
pub fn od_benchmark(
    graph: &NetworkGraph,
    config: &ScenarioConfig,
    options: &BenchmarkOptions,
) -> Result<BenchmarkReport, BenchmarkError> {
    let started = Instant::now();
    let t = options.snapshot_time_s.unwrap_or(DEFAULT_SNAPSHOT_TIME_S.min(i64::from(config.duration_s)));
    let stations = place_stations(graph, &config.stations)?;

    let runs: Vec<Result<(TrafficLevel, Vec<EdgeTrafficRecord>), SimError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = options
            .levels
            .iter()
            .map(|&level| {
                let mut cfg = config.clone();
                cfg.traffic_level = level;
                if let Ok(end) = u32::try_from(t) {
                    cfg.duration_s = cfg.duration_s.min(end.div_ceil(cfg.aggregation_window_s) * cfg.aggregation_window_s);
                }
                scope.spawn(move || {
                    let mut records = Vec::new();
                    run_scenario(graph, &cfg, &mut records).map(|_| (level, records))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    });

    let mut snapshots = BTreeMap::new();
    for run in runs {
        let (level, records) = run?;
        let snapshot = snapshot_at(&records, config.aggregation_window_s, t)
            .ok_or_else(|| BenchmarkError::InvalidOptions(format!("no completed window at t = {t} s")))?;
        snapshots.insert(level, snapshot);
    }
    let mut report = benchmark_snapshots(graph, &stations, &snapshots, &config.energy, options, t)?;
    report.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::generate_synthetic_grid;
    use crate::stations::StationPlacement;

    #[test]
    fn histogram_bins_cover_values() {
        let h = Histogram::new(&[0.0, 29.9, 30.0, 95.0, -1.0], 30.0);
        let counts: Vec<(f64, usize)> = h.bins.iter().map(|b| (b.lower_s, b.count)).collect();
        assert_eq!(counts, vec![(-30.0, 1), (0.0, 2), (30.0, 1), (60.0, 0), (90.0, 1)]);
        assert!(Histogram::new(&[], 30.0).bins.is_empty());
    }

    #[test]
    fn identical_snapshots_give_zero_extra_time() {
        let graph = NetworkGraph::from_jsonl(&generate_synthetic_grid(4, 4, 3).unwrap()).unwrap();
        let stations = place_stations(&graph, &StationPlacement { count: 4, ..Default::default() }).unwrap();
        let snap = TrafficSnapshot::default();
        let snapshots: BTreeMap<_, _> = TrafficLevel::ALL.iter().map(|l| (*l, snap.clone())).collect();
        let options = BenchmarkOptions { pairs: 30, ..Default::default() };
        let report =
            benchmark_snapshots(&graph, &stations, &snapshots, &EnergyModelParams::default(), &options, 0).unwrap();
        assert_eq!(report.pairs.len(), 30);
        for extra in &report.extra_time {
            assert!(extra.values_s.iter().all(|v| *v == 0.0));
            assert_eq!(extra.histogram.total(), 30 - report.excluded);
        }
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 31);
        assert!(csv.starts_with("origin_edge,destination_edge,low_time_s,medium_time_s,high_time_s\n"));
    }

    #[test]
    fn pairs_are_seeded_and_distinct() {
        let graph = NetworkGraph::from_jsonl(&generate_synthetic_grid(3, 3, 1).unwrap()).unwrap();
        let a = sample_od_pairs(&graph, 50, 9);
        assert_eq!(a, sample_od_pairs(&graph, 50, 9));
        assert_ne!(a, sample_od_pairs(&graph, 50, 10));
        assert!(a.iter().all(|(o, d)| o != d));
    }
}
