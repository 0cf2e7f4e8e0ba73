//! Synthetic grid networks used in place of a real city map.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::graph::{ClassParams, EdgeRecord, NetworkRecord, NodeRecord};
use super::{AgentClass, NetworkError};

/// Spacing of node coordinates; only used for drawing.
const CELL_SIZE: f64 = 200.0;

pub const LENGTH_RANGE_M: (f64, f64) = (50.0, 300.0);

/// (free-flow speed range m/s, jam density agents/m) per class.
const CLASS_PROFILE: [(AgentClass, (f64, f64), f64); 3] = [
    (AgentClass::Pedestrian, (1.2, 1.5), 1.0),
    (AgentClass::Bicycle, (4.0, 6.0), 0.12),
    (AgentClass::Car, (8.0, 14.0), 0.1),
];

fn round_to(value: f64, step: f64) -> f64 {
    (value / step).round() * step
}

/// Generates an `rows × cols` grid in the JSON-lines network format.
///
/// Every neighbouring node pair is joined by two directed edges sharing one
/// randomized length; free-flow speeds are drawn per directed edge. All
/// classes are allowed everywhere. The output is a pure function of the
/// arguments.
pub fn generate_synthetic_grid(rows: usize, cols: usize, seed: u64) -> Result<String, NetworkError> {
    if rows < 2 || cols < 2 {
        return Err(NetworkError::InvalidDimension { rows, cols });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let node_id = |r: usize, c: usize| format!("n{r}_{c}");
    let mut records = Vec::with_capacity(rows * cols * 5);

    for r in 0..rows {
        for c in 0..cols {
            records.push(NetworkRecord::Node(NodeRecord {
                id: node_id(r, c),
                x: c as f64 * CELL_SIZE,
                y: r as f64 * CELL_SIZE,
            }));
        }
    }

    let mut links = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                links.push(((r, c), (r, c + 1)));
            }
            if r + 1 < rows {
                links.push(((r, c), (r + 1, c)));
            }
        }
    }

    let mut next_edge = 0usize;
    for (a, b) in links {
        let length = round_to(rng.gen_range(LENGTH_RANGE_M.0..=LENGTH_RANGE_M.1), 0.1);
        for (from, to) in [(a, b), (b, a)] {
            let mut classes = BTreeMap::new();
            for (class, (lo, hi), jam_density) in CLASS_PROFILE {
                let free_flow_speed = round_to(rng.gen_range(lo..=hi), 0.01);
                classes.insert(class, ClassParams { free_flow_speed, jam_density });
            }
            records.push(NetworkRecord::Edge(EdgeRecord {
                id: format!("e{next_edge:04}"),
                from: node_id(from.0, from.1),
                to: node_id(to.0, to.1),
                length,
                classes,
            }));
            next_edge += 1;
        }
    }

    let mut out = String::new();
    for rec in &records {
        out.push_str(&serde_json::to_string(rec).expect("network record serializes"));
        out.push('\n');
    }
    Ok(out)
}
