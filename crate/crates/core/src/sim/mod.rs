//! Mesoscopic multi-class traffic simulation.
//!
//! Agents are tracked individually but interact only through per-edge,
//! per-class counts: the speed on an edge follows a linear density-speed law.

mod channel;
mod engine;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{AgentClass, DemandSchedule, Edge};

pub use channel::{bounded, Publisher, Subscriber};
pub use engine::{
    run_scenario, ClassSummary, EdgeTrafficRecord, IntervalSpawns, JsonlSink, RecordSink, SimState, SimulationSummary,
    Simulator, SinkFn,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("time {t} s is outside the schedule horizon [0, {horizon})")]
    OutOfHorizon { t: f64, horizon: f64 },
    #[error("record sink failed: {0}")]
    Sink(String),
    #[error("record channel closed")]
    ChannelClosed,
    #[error("invalid step: {0}")]
    InvalidStep(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficLevel {
    Low,
    Medium,
    High,
}

impl TrafficLevel {
    pub const ALL: [TrafficLevel; 3] = [TrafficLevel::Low, TrafficLevel::Medium, TrafficLevel::High];

    pub fn as_str(self) -> &'static str {
        match self {
            TrafficLevel::Low => "low",
            TrafficLevel::Medium => "medium",
            TrafficLevel::High => "high",
        }
    }
}

impl std::str::FromStr for TrafficLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TrafficLevel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown traffic level `{s}`"))
    }
}

/// Global demand multiplier applied to every spawn rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelMultipliers {
    pub low: f64,
    pub medium: f64,
    pub high: f64,
}

impl Default for LevelMultipliers {
    fn default() -> Self {
        LevelMultipliers { low: 1.0, medium: 2.0, high: 3.5 }
    }
}

impl LevelMultipliers {
    pub fn get(&self, level: TrafficLevel) -> f64 {
        match level {
            TrafficLevel::Low => self.low,
            TrafficLevel::Medium => self.medium,
            TrafficLevel::High => self.high,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.low > 0.0 && self.low.is_finite()) {
            return Err("low multiplier must be > 0".into());
        }
        if !(self.low < self.medium && self.medium < self.high && self.high.is_finite()) {
            return Err("multipliers must satisfy low < medium < high".into());
        }
        Ok(())
    }
}

/// Spawns per second at time `t`: the reciprocal of the period of the interval
/// containing `t`, scaled by the traffic-level multiplier.
pub fn spawn_rate_at(schedule: &DemandSchedule, t: f64, multiplier: f64) -> Result<f64, SimError> {
    schedule
        .interval_at(t)
        .map(|i| multiplier / i.spawn_period_s)
        .ok_or(SimError::OutOfHorizon { t, horizon: schedule.horizon_s() })
}

/// Linear density-speed law `v_free · max(0, 1 − k/k_jam)` with `k = count/length`.
/// `None` when the class may not use the edge.
pub fn edge_speed(class: AgentClass, count: f64, edge: &Edge) -> Option<f64> {
    let params = edge.classes[class]?;
    let density = count.max(0.0) / edge.length;
    let v = params.free_flow_speed * (1.0 - density / params.jam_density).max(0.0);
    Some(v.clamp(0.0, params.free_flow_speed))
}
