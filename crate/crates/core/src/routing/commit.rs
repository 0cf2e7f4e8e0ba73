use thiserror::Error;

use super::RoutePlan;
use crate::network::TransportMode;
use crate::stations::{Fleet, StationError};
use crate::store::{Datastore, StoreError};

pub use crate::store::UserPathRecord;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CommitError {
    #[error(transparent)]
    Station(#[from] StationError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("plan leg {0} has no pickup or dropoff station")]
    MissingStation(usize),
}

/// Applies a plan's pickups, battery drain and dropoffs to `fleet` and
/// persists the trip. On any error neither the fleet nor the store change.
pub fn commit_route(plan: &RoutePlan, fleet: &mut Fleet, store: &Datastore) -> Result<UserPathRecord, CommitError> {
    let mut next = fleet.clone();
    let mut moved_vehicle = false;
    for (i, leg) in plan.legs.iter().enumerate() {
        let Some(vehicle_type) = leg.mode.vehicle() else { continue };
        let (Some(from), Some(to)) = (&leg.pickup_station, &leg.dropoff_station) else {
            return Err(CommitError::MissingStation(i));
        };
        let station = next.station(from).ok_or_else(|| StationError::UnknownStation(from.clone()))?;
        let vehicle_id = station
            .best_unit(vehicle_type)
            .filter(|u| u.battery_level > 0.0)
            .map(|u| u.vehicle_id.clone())
            .ok_or_else(|| StationError::NotAvailable { station: from.clone(), vehicle: vehicle_type.to_string() })?;
        next.pickup(from, &vehicle_id)?;
        if let Some(unit) = next.in_use_mut(&vehicle_id) {
            unit.drain(leg.leg_energy_wh);
        }
        next.dropoff(to, &vehicle_id)?;
        moved_vehicle = true;
    }
    debug_assert!(plan.legs.iter().all(|l| l.mode == TransportMode::Walk) || moved_vehicle);

    let mut record = UserPathRecord {
        path_id: None,
        start_edge: plan.origin_edge.clone(),
        end_edge: plan.destination_edge.clone(),
        time_cost_s: plan.total_time_s,
        execution_time_ms: plan.execution_time_ms,
        optimal_path_sequence: plan.path_sequence(),
    };
    let id = if moved_vehicle {
        store.record_trip(&record, &next.rows())?
    } else {
        store.insert_user_path(&record)?
    };
    record.path_id = Some(id);
    *fleet = next;
    Ok(record)
}
