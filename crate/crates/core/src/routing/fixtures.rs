//! Small hand-checkable networks used by tests, examples and the FFI smoke
//! tests.

use crate::network::{NetworkGraph, VehicleType};
use crate::stations::{Station, VehicleUnit};

const DETOUR: &str = r#"{"type":"node","id":"n0","x":0,"y":0}
{"type":"node","id":"n1","x":0,"y":50}
{"type":"node","id":"n2","x":100,"y":50}
{"type":"node","id":"n3","x":790,"y":50}
{"type":"edge","id":"o","from":"n0","to":"n1","length":50,"classes":{"pedestrian":{"free_flow_speed":1.0,"jam_density":1.0},"bicycle":{"free_flow_speed":3.45,"jam_density":0.12}}}
{"type":"edge","id":"a","from":"n1","to":"n2","length":100,"classes":{"pedestrian":{"free_flow_speed":1.0,"jam_density":1.0},"bicycle":{"free_flow_speed":3.45,"jam_density":0.12}}}
{"type":"edge","id":"b","from":"n2","to":"n3","length":690,"classes":{"pedestrian":{"free_flow_speed":1.0,"jam_density":1.0},"bicycle":{"free_flow_speed":3.45,"jam_density":0.12}}}
{"type":"edge","id":"c","from":"n3","to":"n0","length":110,"classes":{"pedestrian":{"free_flow_speed":1.0,"jam_density":1.0},"bicycle":{"free_flow_speed":3.45,"jam_density":0.12}}}
"#;

/// Four-node ring `o → a → b → c`. Walking from `o` to `c` takes 900 s; an
/// e-scooter picked up at the end of `a` (station `S1`) and docked at the end
/// of `b` (station `S2`) cuts the trip to 410 s.
pub fn scooter_detour() -> (NetworkGraph, Vec<Station>) {
    let graph = NetworkGraph::from_jsonl(DETOUR).expect("fixture network is valid");
    let stations = vec![
        Station {
            station_id: "S1".into(),
            edge_id: "a".into(),
            capacity: 4,
            inventory: vec![VehicleUnit {
                vehicle_id: "S1-escooter0".into(),
                vehicle_type: VehicleType::EScooter,
                battery_level: 90.0,
                battery_capacity_wh: 400.0,
            }],
        },
        Station { station_id: "S2".into(), edge_id: "b".into(), capacity: 4, inventory: Vec::new() },
    ];
    (graph, stations)
}

pub fn scooter_detour_jsonl() -> &'static str {
    DETOUR
}
