//! Road network, transport modes and scenario configuration.

mod graph;
mod grid;
mod mode;
mod scenario;

use thiserror::Error;

pub use graph::{ClassParams, Edge, EdgeIx, EdgeRecord, NetworkGraph, NetworkRecord, Node, NodeIx, NodeRecord};
pub use grid::generate_synthetic_grid;
pub use mode::{AgentClass, PerClass, TransportMode, VehicleType};
pub use scenario::{
    build_graph, load_scenario, Demand, DemandInterval, DemandSchedule, ScenarioConfig,
    DEFAULT_DURATION_S, DEFAULT_WINDOW_S,
};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },
    #[error("edge `{edge}` references unknown node `{node}`")]
    DanglingEdge { edge: String, node: String },
    #[error("grid must be at least 2x2, got {rows}x{cols}")]
    InvalidDimension { rows: usize, cols: usize },
}
