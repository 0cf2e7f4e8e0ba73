#![allow(dead_code)]

use std::path::PathBuf;

use ehub_core::eval::{load_corpus, QaCase};
use ehub_core::network::{AgentClass, NetworkGraph, TransportMode, VehicleType};
use ehub_core::routing::{RouteRequest, TrafficSnapshot};
use ehub_core::stations::{Station, VehicleUnit};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use ehub_core::rag::{FixtureEmbedder, HashingEmbedder, RagPipeline, ReplayBackend};
use ehub_core::store::Datastore;

pub const TABLE3_SYSTEM_Q: &str = "Which edge_id has the most stations?";
pub const TABLE3_USER_Q: &str = "Find the top 3 most frequent destinations.";
pub const TABLE3_SYSTEM_GOLD: &str =
    "SELECT edge_id, COUNT(*) AS station_count FROM stations GROUP BY edge_id ORDER BY station_count DESC LIMIT 1;";
pub const TABLE3_SYSTEM_PRED: &str = "SELECT edge_id, COUNT(station_id) AS station_count FROM stations GROUP BY edge_id ORDER BY station_count DESC LIMIT 1;";
pub const TABLE3_USER_GOLD: &str =
    "SELECT end_edge, COUNT(*) AS freq FROM user_paths GROUP BY end_edge ORDER BY freq DESC LIMIT 3;";
pub const TABLE3_USER_PRED: &str = "SELECT end_edge, COUNT(*) AS end_edge_count FROM user_paths GROUP BY end_edge ORDER BY end_edge_count DESC LIMIT 3;";
pub const TABLE4_SYSTEM_GOLD: &str = "SELECT o.edge_id, AVG(o.bike_speed) AS avg_bike_speed FROM online_demo o JOIN stations s ON o.edge_id = s.edge_id GROUP BY o.edge_id;";
pub const TABLE4_SYSTEM_PRED: &str = "SELECT AVG(bike_speed) AS average_bike_speed FROM online_demo WHERE edge_id IN (SELECT edge_id FROM stations);";
pub const TABLE4_USER_GOLD: &str = "SELECT * FROM user_paths WHERE LENGTH(optimal_path_sequence) - LENGTH(REPLACE(optimal_path_sequence, '(', '')) > 4;";
pub const TABLE4_USER_PRED: &str = "SELECT * FROM user_paths WHERE LENGTH(optimal_path_sequence) - LENGTH(REPLACE(optimal_path_sequence, ',', '')) > 4;";

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn fixture_store() -> Datastore {
    let store = Datastore::initialized().expect("schema");
    store.seed_from_dir(&fixture("db")).expect("seed fixture db");
    store
}

pub fn corpus(name: &str) -> Vec<QaCase> {
    load_corpus(&fixture(&format!("eval/{name}"))).expect("corpus")
}

/// Pipeline used for all recorded evaluation cassettes.
pub fn hashing_pipeline(store: &Datastore) -> RagPipeline {
    RagPipeline::build(store, Box::new(HashingEmbedder::default())).expect("pipeline")
}

pub fn fixture_pipeline(store: &Datastore) -> RagPipeline {
    let embedder = FixtureEmbedder::from_file(&fixture("rag/vectors.json")).expect("fixture vectors");
    RagPipeline::build(store, Box::new(embedder)).expect("pipeline")
}

pub fn replay(model: &str, rel: &str) -> ReplayBackend {
    ReplayBackend::from_file(model, &fixture(rel)).expect("cassette")
}

/// A random routing problem on at most 12 edges.
pub struct Instance {
    pub graph: NetworkGraph,
    pub stations: Vec<Station>,
    pub snapshot: TrafficSnapshot,
    pub request: RouteRequest,
}

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = rng.gen_range(3..=5);
    let edges = rng.gen_range(nodes..=12);
    let mut lines: Vec<String> =
        (0..nodes).map(|i| json!({"type": "node", "id": format!("n{i}"), "x": i * 100, "y": 0}).to_string()).collect();
    for e in 0..edges {
        // the first `nodes` edges form a ring so most pairs are connected
        let from = if e < nodes { e } else { rng.gen_range(0..nodes) };
        let to = if e < nodes { (e + 1) % nodes } else { (from + rng.gen_range(1..nodes)) % nodes };
        let mut classes = serde_json::Map::new();
        classes.insert(
            "pedestrian".into(),
            json!({"free_flow_speed": rng.gen_range(0.8..1.6), "jam_density": rng.gen_range(0.5..1.5)}),
        );
        if rng.gen_bool(0.7) {
            classes.insert("bicycle".into(), json!({"free_flow_speed": rng.gen_range(2.0..6.0), "jam_density": 0.15}));
        }
        if rng.gen_bool(0.5) {
            classes.insert("car".into(), json!({"free_flow_speed": rng.gen_range(8.0..15.0), "jam_density": 0.15}));
        }
        lines.push(
            json!({"type": "edge", "id": format!("e{e:02}"), "from": format!("n{from}"), "to": format!("n{to}"),
                   "length": rng.gen_range(50..600), "classes": classes})
            .to_string(),
        );
    }
    let graph = NetworkGraph::from_jsonl(&lines.join("\n")).expect("generated network is valid");

    let mut edge_ids: Vec<String> = graph.edges().iter().map(|e| e.id.clone()).collect();
    edge_ids.shuffle(&mut rng);
    let stations = edge_ids
        .iter()
        .take(rng.gen_range(2..=6))
        .enumerate()
        .map(|(i, edge)| {
            let capacity = rng.gen_range(1..=4);
            let inventory = (0..rng.gen_range(0..capacity))
                .map(|j| VehicleUnit {
                    vehicle_id: format!("S{i}-v{j}"),
                    vehicle_type: *VehicleType::ALL.choose(&mut rng).unwrap(),
                    battery_level: rng.gen_range(5.0..100.0),
                    battery_capacity_wh: rng.gen_range(50.0..1000.0),
                })
                .collect();
            Station { station_id: format!("S{i}"), edge_id: edge.clone(), capacity, inventory }
        })
        .collect();

    let mut snapshot = TrafficSnapshot::default();
    // congested edges carry a speed for every allowed class, as simulator output does
    for edge in graph.edges() {
        if !rng.gen_bool(0.4) {
            continue;
        }
        for class in AgentClass::ALL {
            if let Some(vf) = edge.free_flow_speed(class) {
                let factor = if rng.gen_bool(0.05) { 0.0 } else { rng.gen_range(0.05..1.0) };
                snapshot.set(edge.id.clone(), class, Some(vf * factor));
            }
        }
    }

    let ids: Vec<&String> = graph.edges().iter().map(|e| &e.id).collect();
    let mut request = RouteRequest::new(ids.choose(&mut rng).unwrap().as_str(), ids.choose(&mut rng).unwrap().as_str());
    request.max_transfers = rng.gen_range(0..=4);
    request.allowed_modes = TransportMode::ALL.into_iter().filter(|_| rng.gen_bool(0.75)).collect();
    for mode in [TransportMode::EBike, TransportMode::EScooter, TransportMode::ECar] {
        if rng.gen_bool(0.3) {
            request.energy_budget_wh.insert(mode, rng.gen_range(0.0..40.0));
        }
    }
    Instance { graph, stations, snapshot, request }
}
