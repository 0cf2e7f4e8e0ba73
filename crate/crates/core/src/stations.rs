//! eHub docking stations: placement, inventory and pickup/dropoff.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{NetworkGraph, VehicleType};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StationError {
    #[error("cannot place {requested} stations on {available} edges")]
    TooManyStations { requested: usize, available: usize },
    #[error("vehicle `{vehicle}` is not available at station `{station}`")]
    NotAvailable { station: String, vehicle: String },
    #[error("station `{station}` has no free dock")]
    StationFull { station: String },
    #[error("unknown station `{0}`")]
    UnknownStation(String),
    #[error("vehicle `{0}` is already docked")]
    AlreadyDocked(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleUnit {
    pub vehicle_id: String,
    pub vehicle_type: VehicleType,
    /// percent, 0..=100
    pub battery_level: f64,
    pub battery_capacity_wh: f64,
}

impl VehicleUnit {
    /// Energy currently stored, watt-hours.
    pub fn energy_wh(&self) -> f64 {
        self.battery_level / 100.0 * self.battery_capacity_wh
    }

    /// Drains `wh` watt-hours, never below empty.
    pub fn drain(&mut self, wh: f64) {
        let pct = wh / self.battery_capacity_wh * 100.0;
        self.battery_level = (self.battery_level - pct).clamp(0.0, 100.0);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub station_id: String,
    pub edge_id: String,
    pub capacity: u32,
    pub inventory: Vec<VehicleUnit>,
}

impl Station {
    pub fn free_docks(&self) -> usize {
        (self.capacity as usize).saturating_sub(self.inventory.len())
    }

    pub fn has_free_dock(&self) -> bool {
        self.free_docks() > 0
    }

    /// Units of `vehicle_type` with at least `min_battery` percent charge.
    pub fn query_availability(&self, vehicle_type: VehicleType, min_battery: f64) -> usize {
        self.inventory
            .iter()
            .filter(|u| u.vehicle_type == vehicle_type && u.battery_level >= min_battery)
            .count()
    }

    /// The best-charged unit of a type, lowest id on ties.
    pub fn best_unit(&self, vehicle_type: VehicleType) -> Option<&VehicleUnit> {
        self.inventory.iter().filter(|u| u.vehicle_type == vehicle_type).max_by(|a, b| {
            a.battery_level
                .total_cmp(&b.battery_level)
                .then_with(|| b.vehicle_id.cmp(&a.vehicle_id))
        })
    }

    pub fn pickup(&mut self, vehicle_id: &str) -> Result<VehicleUnit, StationError> {
        let pos = self.inventory.iter().position(|u| u.vehicle_id == vehicle_id).ok_or_else(|| {
            StationError::NotAvailable { station: self.station_id.clone(), vehicle: vehicle_id.to_string() }
        })?;
        Ok(self.inventory.remove(pos))
    }

    pub fn dropoff(&mut self, unit: VehicleUnit) -> Result<(), StationError> {
        if self.inventory.iter().any(|u| u.vehicle_id == unit.vehicle_id) {
            return Err(StationError::AlreadyDocked(unit.vehicle_id));
        }
        if !self.has_free_dock() {
            return Err(StationError::StationFull { station: self.station_id.clone() });
        }
        self.inventory.push(unit);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Transaction {
    Pickup { vehicle_id: String },
    Dropoff { unit: VehicleUnit },
}

/// Applies one transaction, returning the updated station. The input station
/// is untouched, so a failed transaction leaves no partial state.
pub fn apply_transaction(station: &Station, op: Transaction) -> Result<Station, StationError> {
    let mut next = station.clone();
    match op {
        Transaction::Pickup { vehicle_id } => {
            next.pickup(&vehicle_id)?;
        }
        Transaction::Dropoff { unit } => next.dropoff(unit)?,
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PlacementStrategy {
    #[default]
    UniformRandom,
    /// Edge weight = total degree of its two endpoints.
    DegreeWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InventoryMix {
    pub ebike: u32,
    pub escooter: u32,
    pub ecar: u32,
    pub battery_min: f64,
    pub battery_max: f64,
    pub ebike_capacity_wh: f64,
    pub escooter_capacity_wh: f64,
    pub ecar_capacity_wh: f64,
}

impl Default for InventoryMix {
    fn default() -> Self {
        InventoryMix {
            ebike: 3,
            escooter: 3,
            ecar: 1,
            battery_min: 60.0,
            battery_max: 100.0,
            ebike_capacity_wh: 500.0,
            escooter_capacity_wh: 400.0,
            ecar_capacity_wh: 50_000.0,
        }
    }
}

impl InventoryMix {
    pub fn total(&self) -> u32 {
        self.ebike + self.escooter + self.ecar
    }

    fn capacity_wh(&self, t: VehicleType) -> f64 {
        match t {
            VehicleType::EBike => self.ebike_capacity_wh,
            VehicleType::EScooter => self.escooter_capacity_wh,
            VehicleType::ECar => self.ecar_capacity_wh,
        }
    }

    fn count(&self, t: VehicleType) -> u32 {
        match t {
            VehicleType::EBike => self.ebike,
            VehicleType::EScooter => self.escooter,
            VehicleType::ECar => self.ecar,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationPlacement {
    pub count: usize,
    pub strategy: PlacementStrategy,
    pub seed: u64,
    /// Docks per station.
    pub capacity: u32,
    pub inventory: InventoryMix,
}

impl Default for StationPlacement {
    fn default() -> Self {
        StationPlacement {
            count: 20,
            strategy: PlacementStrategy::UniformRandom,
            seed: 42,
            capacity: 10,
            inventory: InventoryMix::default(),
        }
    }
}

impl StationPlacement {
    pub fn validate(&self) -> Result<(), String> {
        let inv = &self.inventory;
        if self.capacity == 0 {
            return Err("capacity must be >= 1".into());
        }
        if inv.total() > self.capacity {
            return Err(format!("inventory of {} exceeds capacity {}", inv.total(), self.capacity));
        }
        if !(0.0 <= inv.battery_min && inv.battery_min <= inv.battery_max && inv.battery_max <= 100.0) {
            return Err("battery range must satisfy 0 <= min <= max <= 100".into());
        }
        if [inv.ebike_capacity_wh, inv.escooter_capacity_wh, inv.ecar_capacity_wh]
            .iter()
            .any(|c| !(c.is_finite() && *c > 0.0))
        {
            return Err("battery capacities must be > 0".into());
        }
        Ok(())
    }
}

/// Places `placement.count` stations on distinct edges and seeds their
/// inventory. Deterministic for a fixed seed.
pub fn place_stations(graph: &NetworkGraph, placement: &StationPlacement) -> Result<Vec<Station>, StationError> {
    let n = graph.edge_count();
    if placement.count > n {
        return Err(StationError::TooManyStations { requested: placement.count, available: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(placement.seed);
    let mut chosen: Vec<usize> = match placement.strategy {
        PlacementStrategy::UniformRandom => index::sample(&mut rng, n, placement.count).into_vec(),
        PlacementStrategy::DegreeWeighted => {
            let weight = |e: usize| {
                let edge = graph.edge(e);
                (graph.degree(edge.from) + graph.degree(edge.to)) as f64
            };
            index::sample_weighted(&mut rng, n, weight, placement.count)
                .expect("degree weights are positive and finite")
                .into_vec()
        }
    };
    chosen.sort_unstable();

    let inv = placement.inventory;
    let width = placement.count.to_string().len().max(3);
    let stations = chosen
        .into_iter()
        .enumerate()
        .map(|(k, e)| {
            let station_id = format!("S{k:0width$}");
            let mut inventory = Vec::with_capacity(inv.total() as usize);
            for t in VehicleType::ALL {
                for i in 0..inv.count(t) {
                    let level = if inv.battery_max > inv.battery_min {
                        rng.gen_range(inv.battery_min..=inv.battery_max)
                    } else {
                        inv.battery_min
                    };
                    inventory.push(VehicleUnit {
                        vehicle_id: format!("{station_id}-{t}{i}"),
                        vehicle_type: t,
                        battery_level: (level * 10.0).round() / 10.0,
                        battery_capacity_wh: inv.capacity_wh(t),
                    });
                }
            }
            Station { station_id, edge_id: graph.edge(e).id.clone(), capacity: placement.capacity, inventory }
        })
        .collect();
    Ok(stations)
}

/// Row of the `stations` table: one per docked vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationRow {
    pub station_id: String,
    pub edge_id: String,
    pub vehicle_id: String,
    pub vehicle_type: String,
    pub battery_level: f64,
}

/// All stations plus the vehicles currently out on trips. Every vehicle id
/// lives in exactly one place.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Fleet {
    stations: BTreeMap<String, Station>,
    in_use: BTreeMap<String, VehicleUnit>,
}

impl Fleet {
    pub fn new(stations: Vec<Station>) -> Self {
        Fleet {
            stations: stations.into_iter().map(|s| (s.station_id.clone(), s)).collect(),
            in_use: BTreeMap::new(),
        }
    }

    pub fn stations(&self) -> impl Iterator<Item = &Station> {
        self.stations.values()
    }

    pub fn station(&self, id: &str) -> Option<&Station> {
        self.stations.get(id)
    }

    pub fn in_use(&self) -> impl Iterator<Item = &VehicleUnit> {
        self.in_use.values()
    }

    /// Station located on `edge_id`, if any.
    pub fn station_on_edge(&self, edge_id: &str) -> Option<&Station> {
        self.stations.values().find(|s| s.edge_id == edge_id)
    }

    pub fn vehicle_count(&self) -> usize {
        self.stations.values().map(|s| s.inventory.len()).sum::<usize>() + self.in_use.len()
    }

    pub fn pickup(&mut self, station_id: &str, vehicle_id: &str) -> Result<&VehicleUnit, StationError> {
        let station = self
            .stations
            .get_mut(station_id)
            .ok_or_else(|| StationError::UnknownStation(station_id.to_string()))?;
        let unit = station.pickup(vehicle_id)?;
        let id = unit.vehicle_id.clone();
        self.in_use.insert(id.clone(), unit);
        Ok(&self.in_use[&id])
    }

    pub fn in_use_mut(&mut self, vehicle_id: &str) -> Option<&mut VehicleUnit> {
        self.in_use.get_mut(vehicle_id)
    }

    pub fn dropoff(&mut self, station_id: &str, vehicle_id: &str) -> Result<(), StationError> {
        let station = self
            .stations
            .get_mut(station_id)
            .ok_or_else(|| StationError::UnknownStation(station_id.to_string()))?;
        let unit = self.in_use.get(vehicle_id).cloned().ok_or_else(|| StationError::NotAvailable {
            station: station_id.to_string(),
            vehicle: vehicle_id.to_string(),
        })?;
        station.dropoff(unit)?;
        self.in_use.remove(vehicle_id);
        Ok(())
    }

    pub fn rows(&self) -> Vec<StationRow> {
        self.stations
            .values()
            .flat_map(|s| {
                s.inventory.iter().map(move |u| StationRow {
                    station_id: s.station_id.clone(),
                    edge_id: s.edge_id.clone(),
                    vehicle_id: u.vehicle_id.clone(),
                    vehicle_type: u.vehicle_type.to_string(),
                    battery_level: u.battery_level,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::generate_synthetic_grid;

    fn unit(id: &str, t: VehicleType, level: f64) -> VehicleUnit {
        VehicleUnit { vehicle_id: id.into(), vehicle_type: t, battery_level: level, battery_capacity_wh: 400.0 }
    }

    fn station(units: Vec<VehicleUnit>, capacity: u32) -> Station {
        Station { station_id: "S0".into(), edge_id: "e0".into(), capacity, inventory: units }
    }

    fn grid() -> NetworkGraph {
        NetworkGraph::from_jsonl(&generate_synthetic_grid(5, 5, 1).unwrap()).unwrap()
    }

    #[test]
    fn availability_counts() {
        assert_eq!(station(vec![], 5).query_availability(VehicleType::EBike, 0.0), 0);
        let three = station((0..3).map(|i| unit(&format!("b{i}"), VehicleType::EBike, 80.0)).collect(), 5);
        assert_eq!(three.query_availability(VehicleType::EBike, 50.0), 3);
        let mixed = station(
            vec![
                unit("b0", VehicleType::EBike, 90.0),
                unit("b1", VehicleType::EBike, 90.0),
                unit("b2", VehicleType::EBike, 20.0),
                unit("s0", VehicleType::EScooter, 70.0),
            ],
            5,
        );
        assert_eq!(mixed.query_availability(VehicleType::EBike, 50.0), 2);
    }

    #[test]
    fn transactions() {
        let s = station(vec![unit("s0", VehicleType::EScooter, 70.0)], 1);
        let picked = apply_transaction(&s, Transaction::Pickup { vehicle_id: "s0".into() }).unwrap();
        assert_eq!(picked.inventory.len(), 0);
        assert!(matches!(
            apply_transaction(&picked, Transaction::Pickup { vehicle_id: "s0".into() }),
            Err(StationError::NotAvailable { .. })
        ));
        let back = apply_transaction(&picked, Transaction::Dropoff { unit: s.inventory[0].clone() }).unwrap();
        assert_eq!(back, s);
        assert!(matches!(
            apply_transaction(&s, Transaction::Dropoff { unit: unit("x", VehicleType::EBike, 1.0) }),
            Err(StationError::StationFull { .. })
        ));
    }

    #[test]
    fn placement_is_deterministic_and_distinct() {
        let g = grid();
        let p = StationPlacement { count: 5, seed: 42, ..Default::default() };
        let a = place_stations(&g, &p).unwrap();
        let b = place_stations(&g, &p).unwrap();
        assert_eq!(a, b);
        let mut edges: Vec<_> = a.iter().map(|s| &s.edge_id).collect();
        edges.dedup();
        assert_eq!(edges.len(), 5);
        for s in &a {
            assert_eq!(s.inventory.len(), 7);
            assert!(s.inventory.iter().all(|u| (60.0..=100.0).contains(&u.battery_level)));
        }
        assert!(place_stations(&g, &StationPlacement { count: 0, ..p }).unwrap().is_empty());
    }

    #[test]
    fn too_many_stations() {
        let g = grid();
        let p = StationPlacement { count: g.edge_count() + 1, ..Default::default() };
        assert!(matches!(place_stations(&g, &p), Err(StationError::TooManyStations { .. })));
    }

    #[test]
    fn degree_weighting_prefers_the_hub_link() {
        // Two hubs joined by a link, each with four leaves.
        let mut text = String::from("{\"type\":\"node\",\"id\":\"h1\"}\n{\"type\":\"node\",\"id\":\"h2\"}\n");
        let edge = |id: &str, a: &str, b: &str| {
            format!(
                "{{\"type\":\"edge\",\"id\":\"{id}\",\"from\":\"{a}\",\"to\":\"{b}\",\"length\":100.0,\"classes\":{{\"pedestrian\":{{\"free_flow_speed\":1.4,\"jam_density\":1.0}}}}}}\n"
            )
        };
        text.push_str(&edge("hub", "h1", "h2"));
        for h in ["h1", "h2"] {
            for k in 0..4 {
                let leaf = format!("{h}l{k}");
                text.push_str(&format!("{{\"type\":\"node\",\"id\":\"{leaf}\"}}\n"));
                text.push_str(&edge(&format!("{h}o{k}"), h, &leaf));
                text.push_str(&edge(&format!("{h}i{k}"), &leaf, h));
            }
        }
        let g = NetworkGraph::from_jsonl(&text).unwrap();
        let mut freq: BTreeMap<String, usize> = BTreeMap::new();
        for seed in 0..1000 {
            let p = StationPlacement {
                count: 1,
                seed,
                strategy: PlacementStrategy::DegreeWeighted,
                ..Default::default()
            };
            let s = place_stations(&g, &p).unwrap();
            *freq.entry(s[0].edge_id.clone()).or_default() += 1;
        }
        let hub = freq["hub"];
        assert!(freq.iter().all(|(id, &n)| id == "hub" || n < hub), "{freq:?}");
    }

    #[test]
    fn fleet_moves_units_between_stations() {
        let g = grid();
        let stations = place_stations(&g, &StationPlacement { count: 2, ..Default::default() }).unwrap();
        let (a, b) = (stations[0].station_id.clone(), stations[1].station_id.clone());
        let vid = stations[0].inventory[0].vehicle_id.clone();
        let mut fleet = Fleet::new(stations);
        let total = fleet.vehicle_count();
        fleet.pickup(&a, &vid).unwrap();
        assert_eq!(fleet.vehicle_count(), total);
        assert_eq!(fleet.in_use().count(), 1);
        // b is full (7 of 10 docks used), dropping off works
        fleet.dropoff(&b, &vid).unwrap();
        assert_eq!(fleet.station(&b).unwrap().inventory.len(), 8);
        assert_eq!(fleet.rows().len(), total);
    }
}
