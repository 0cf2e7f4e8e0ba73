use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{AgentClass, NetworkError, NetworkGraph};
use crate::routing::EnergyModelParams;
use crate::sim::{LevelMultipliers, TrafficLevel};
use crate::stations::StationPlacement;

pub const DEFAULT_DURATION_S: u32 = 86_400;
pub const DEFAULT_WINDOW_S: u32 = 360;

/// Half-open interval `[start_s, end_s)` with one spawn every `spawn_period_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandInterval {
    pub start_s: f64,
    pub end_s: f64,
    pub spawn_period_s: f64,
}

impl DemandInterval {
    pub const fn new(start_s: f64, end_s: f64, spawn_period_s: f64) -> Self {
        DemandInterval { start_s, end_s, spawn_period_s }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start_s <= t && t < self.end_s
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandSchedule {
    pub agent_class: AgentClass,
    pub intervals: Vec<DemandInterval>,
}

const TABLE1_BOUNDS: [(f64, f64); 4] =
    [(0.0, 20_000.0), (20_000.0, 62_000.0), (62_000.0, 70_000.0), (70_000.0, 86_400.0)];

impl DemandSchedule {
    fn from_periods(agent_class: AgentClass, periods: [f64; 4]) -> Self {
        let intervals = TABLE1_BOUNDS
            .iter()
            .zip(periods)
            .map(|(&(s, e), p)| DemandInterval::new(s, e, p))
            .collect();
        DemandSchedule { agent_class, intervals }
    }

    /// Default 24-hour bicycle profile.
    pub fn default_bicycle() -> Self {
        Self::from_periods(AgentClass::Bicycle, [7.0, 1.5, 2.5, 5.0])
    }

    /// Default 24-hour pedestrian profile.
    pub fn default_pedestrian() -> Self {
        Self::from_periods(AgentClass::Pedestrian, [2.0, 0.75, 0.8, 1.5])
    }

    /// Cars default to the bicycle profile with halved periods (twice as dense).
    pub fn default_car() -> Self {
        let mut s = Self::default_bicycle();
        s.agent_class = AgentClass::Car;
        for i in &mut s.intervals {
            i.spawn_period_s *= 0.5;
        }
        s
    }

    pub fn default_for(class: AgentClass) -> Self {
        match class {
            AgentClass::Pedestrian => Self::default_pedestrian(),
            AgentClass::Bicycle => Self::default_bicycle(),
            AgentClass::Car => Self::default_car(),
        }
    }

    pub fn interval_at(&self, t: f64) -> Option<&DemandInterval> {
        self.intervals.iter().find(|i| i.contains(t))
    }

    /// End of the last interval.
    pub fn horizon_s(&self) -> f64 {
        self.intervals.last().map_or(0.0, |i| i.end_s)
    }

    /// Checks sortedness, contiguity from zero, positive periods and coverage of
    /// `[0, duration)`, then drops or truncates intervals past `duration`.
    fn validated(mut self, duration: f64, field: &str) -> Result<Self, NetworkError> {
        let invalid = |message: String| NetworkError::Validation { field: field.to_string(), message };
        if self.intervals.is_empty() {
            return Err(invalid("at least one interval is required".into()));
        }
        let mut cursor = 0.0;
        for (k, i) in self.intervals.iter().enumerate() {
            if !(i.spawn_period_s.is_finite() && i.spawn_period_s > 0.0) {
                return Err(invalid(format!("interval {k}: spawn_period_s must be > 0")));
            }
            if i.start_s != cursor {
                return Err(invalid(format!(
                    "interval {k}: starts at {} but previous coverage ends at {cursor}",
                    i.start_s
                )));
            }
            if i.end_s.partial_cmp(&i.start_s) != Some(std::cmp::Ordering::Greater) {
                return Err(invalid(format!("interval {k}: end_s must exceed start_s")));
            }
            cursor = i.end_s;
        }
        if cursor < duration {
            return Err(invalid(format!("intervals end at {cursor}, before duration {duration}")));
        }
        self.intervals.retain(|i| i.start_s < duration);
        if let Some(last) = self.intervals.last_mut() {
            last.end_s = last.end_s.min(duration);
        }
        Ok(self)
    }
}

/// Demand per agent class; `None` disables spawning for that class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Demand {
    pub multipliers: LevelMultipliers,
    pub pedestrian: Option<DemandSchedule>,
    pub bicycle: Option<DemandSchedule>,
    pub car: Option<DemandSchedule>,
}

impl Demand {
    pub fn schedule(&self, class: AgentClass) -> Option<&DemandSchedule> {
        match class {
            AgentClass::Pedestrian => self.pedestrian.as_ref(),
            AgentClass::Bicycle => self.bicycle.as_ref(),
            AgentClass::Car => self.car.as_ref(),
        }
    }

    pub fn schedule_mut(&mut self, class: AgentClass) -> &mut Option<DemandSchedule> {
        match class {
            AgentClass::Pedestrian => &mut self.pedestrian,
            AgentClass::Bicycle => &mut self.bicycle,
            AgentClass::Car => &mut self.car,
        }
    }

    /// No spawning for any class.
    pub fn none() -> Self {
        Demand { multipliers: LevelMultipliers::default(), pedestrian: None, bicycle: None, car: None }
    }
}

impl Default for Demand {
    fn default() -> Self {
        Demand {
            multipliers: LevelMultipliers::default(),
            pedestrian: Some(DemandSchedule::default_pedestrian()),
            bicycle: Some(DemandSchedule::default_bicycle()),
            car: Some(DemandSchedule::default_car()),
        }
    }
}

/// Validated scenario description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub network: PathBuf,
    pub duration_s: u32,
    pub aggregation_window_s: u32,
    pub traffic_level: TrafficLevel,
    pub demand: Demand,
    pub stations: StationPlacement,
    pub energy: EnergyModelParams,
    pub seed: u64,
}

// ---- file format -------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    network: PathBuf,
    duration_s: Option<u32>,
    aggregation_window_s: Option<u32>,
    traffic_level: Option<TrafficLevel>,
    demand: Option<DemandFile>,
    stations: Option<StationPlacement>,
    energy: Option<EnergyModelParams>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DemandFile {
    multipliers: Option<LevelMultipliers>,
    pedestrian: Option<ClassDemand>,
    bicycle: Option<ClassDemand>,
    car: Option<ClassDemand>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ClassDemand {
    Intervals(Vec<DemandInterval>),
    Switch(DemandSwitch),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum DemandSwitch {
    Off,
    Default,
}

impl ScenarioConfig {
    /// Minimal configuration with every default filled in.
    pub fn with_network(network: impl Into<PathBuf>) -> Self {
        ScenarioConfig {
            network: network.into(),
            duration_s: DEFAULT_DURATION_S,
            aggregation_window_s: DEFAULT_WINDOW_S,
            traffic_level: TrafficLevel::Low,
            demand: Demand::default(),
            stations: StationPlacement::default(),
            energy: EnergyModelParams::default(),
            seed: 0,
        }
    }

    /// Parses and validates scenario JSON. A relative `network` path is
    /// resolved against `base_dir` when given.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self, NetworkError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| NetworkError::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        let mut cfg = ScenarioConfig::with_network(match base_dir {
            Some(dir) if file.network.is_relative() => dir.join(&file.network),
            _ => file.network,
        });
        if let Some(d) = file.duration_s {
            cfg.duration_s = d;
        }
        if let Some(w) = file.aggregation_window_s {
            cfg.aggregation_window_s = w;
        }
        if let Some(level) = file.traffic_level {
            cfg.traffic_level = level;
        }
        if let Some(s) = file.stations {
            cfg.stations = s;
        }
        if let Some(e) = file.energy {
            cfg.energy = e;
        }
        if let Some(seed) = file.seed {
            cfg.seed = seed;
        }
        let demand = file.demand.unwrap_or_default();
        if let Some(m) = demand.multipliers {
            cfg.demand.multipliers = m;
        }
        for (class, spec) in [
            (AgentClass::Pedestrian, demand.pedestrian),
            (AgentClass::Bicycle, demand.bicycle),
            (AgentClass::Car, demand.car),
        ] {
            let slot = cfg.demand.schedule_mut(class);
            match spec {
                None | Some(ClassDemand::Switch(DemandSwitch::Default)) => {}
                Some(ClassDemand::Switch(DemandSwitch::Off)) => *slot = None,
                Some(ClassDemand::Intervals(intervals)) => {
                    *slot = Some(DemandSchedule { agent_class: class, intervals })
                }
            }
        }
        cfg.validate()
    }

    /// Checks every invariant and clips demand schedules to the duration.
    pub fn validate(mut self) -> Result<Self, NetworkError> {
        let invalid = |field: &str, message: &str| NetworkError::Validation {
            field: field.to_string(),
            message: message.to_string(),
        };
        if self.duration_s == 0 {
            return Err(invalid("duration_s", "must be > 0"));
        }
        if self.aggregation_window_s == 0 {
            return Err(invalid("aggregation_window_s", "must be > 0"));
        }
        if !self.duration_s.is_multiple_of(self.aggregation_window_s) {
            return Err(NetworkError::Validation {
                field: "aggregation_window_s".into(),
                message: format!(
                    "{} does not divide duration_s {}",
                    self.aggregation_window_s, self.duration_s
                ),
            });
        }
        self.demand
            .multipliers
            .validate()
            .map_err(|m| invalid("demand.multipliers", &m))?;
        let duration = f64::from(self.duration_s);
        for class in AgentClass::ALL {
            let slot = self.demand.schedule_mut(class);
            if let Some(s) = slot.take() {
                *slot = Some(s.validated(duration, &format!("demand.{class}"))?);
            }
        }
        self.stations.validate().map_err(|m| invalid("stations", &m))?;
        self.energy.validate().map_err(|m| invalid("energy", &m))?;
        Ok(self)
    }

    pub fn window_count(&self) -> u32 {
        self.duration_s / self.aggregation_window_s
    }
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, NetworkError> {
    let text = std::fs::read_to_string(path).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioConfig::from_json(&text, path.parent())
}

/// Loads the network a scenario points at.
pub fn build_graph(config: &ScenarioConfig) -> Result<NetworkGraph, NetworkError> {
    NetworkGraph::from_file(&config.network)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig, NetworkError> {
        ScenarioConfig::from_json(text, None)
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = parse(r#"{"network": "grid.jsonl"}"#).unwrap();
        assert_eq!(cfg.duration_s, 86_400);
        assert_eq!(cfg.aggregation_window_s, 360);
        assert_eq!(cfg.traffic_level, TrafficLevel::Low);
        assert_eq!(cfg.network, PathBuf::from("grid.jsonl"));
        assert_eq!(cfg.demand.bicycle, Some(DemandSchedule::default_bicycle()));
    }

    #[test]
    fn bicycle_schedule_from_file() {
        let cfg = parse(
            r#"{"network": "n.jsonl", "demand": {"bicycle": [
                {"start_s": 0, "end_s": 20000, "spawn_period_s": 7},
                {"start_s": 20000, "end_s": 62000, "spawn_period_s": 1.5},
                {"start_s": 62000, "end_s": 70000, "spawn_period_s": 2.5},
                {"start_s": 70000, "end_s": 86400, "spawn_period_s": 5}
            ]}}"#,
        )
        .unwrap();
        let got: Vec<_> = cfg
            .demand
            .bicycle
            .unwrap()
            .intervals
            .iter()
            .map(|i| (i.start_s, i.end_s, i.spawn_period_s))
            .collect();
        assert_eq!(
            got,
            vec![(0.0, 20000.0, 7.0), (20000.0, 62000.0, 1.5), (62000.0, 70000.0, 2.5), (70000.0, 86400.0, 5.0)]
        );
    }

    #[test]
    fn window_must_divide_duration() {
        match parse(r#"{"network": "n.jsonl", "aggregation_window_s": 7}"#) {
            Err(NetworkError::Validation { field, .. }) => assert_eq!(field, "aggregation_window_s"),
            other => panic!("expected ValidationError, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_bad_json_are_rejected() {
        assert!(matches!(
            parse(r#"{"network": "n.jsonl", "speed_limit": 3}"#),
            Err(NetworkError::Parse { .. })
        ));
        assert!(matches!(parse(r#"{"network": "#), Err(NetworkError::Parse { .. })));
        assert!(matches!(parse(r#"{"duration_s": 10}"#), Err(NetworkError::Parse { .. })));
    }

    #[test]
    fn schedules_are_clipped_to_short_durations() {
        let cfg = parse(r#"{"network": "n.jsonl", "duration_s": 720}"#).unwrap();
        let ped = cfg.demand.pedestrian.unwrap();
        assert_eq!(ped.intervals, vec![DemandInterval::new(0.0, 720.0, 2.0)]);
    }

    #[test]
    fn gaps_and_short_coverage_are_rejected() {
        let gap = r#"{"network": "n.jsonl", "duration_s": 100, "aggregation_window_s": 50, "demand": {"car": [
            {"start_s": 0, "end_s": 40, "spawn_period_s": 1},
            {"start_s": 50, "end_s": 100, "spawn_period_s": 1}]}}"#;
        match parse(gap) {
            Err(NetworkError::Validation { field, .. }) => assert_eq!(field, "demand.car"),
            other => panic!("{other:?}"),
        }
        let short = r#"{"network": "n.jsonl", "duration_s": 100, "aggregation_window_s": 50, "demand": {"car": [
            {"start_s": 0, "end_s": 40, "spawn_period_s": 1}]}}"#;
        assert!(matches!(parse(short), Err(NetworkError::Validation { .. })));
        let zero_period = r#"{"network": "n.jsonl", "duration_s": 100, "aggregation_window_s": 50, "demand": {"car": [
            {"start_s": 0, "end_s": 100, "spawn_period_s": 0}]}}"#;
        assert!(matches!(parse(zero_period), Err(NetworkError::Validation { .. })));
    }

    #[test]
    fn demand_can_be_switched_off() {
        let cfg = parse(r#"{"network": "n.jsonl", "demand": {"car": "off", "bicycle": "default"}}"#).unwrap();
        assert!(cfg.demand.car.is_none());
        assert!(cfg.demand.bicycle.is_some());
    }

    #[test]
    fn relative_network_resolves_against_scenario_dir() {
        let cfg = ScenarioConfig::from_json(r#"{"network": "net.jsonl"}"#, Some(Path::new("/data/s"))).unwrap();
        assert_eq!(cfg.network, PathBuf::from("/data/s/net.jsonl"));
    }

    #[test]
    fn car_default_is_denser_bicycle_profile() {
        let car = DemandSchedule::default_car();
        let bike = DemandSchedule::default_bicycle();
        for (c, b) in car.intervals.iter().zip(&bike.intervals) {
            assert_eq!(c.spawn_period_s * 2.0, b.spawn_period_s);
        }
    }
}
