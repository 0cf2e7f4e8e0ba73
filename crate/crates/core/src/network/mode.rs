use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Speed class used by the simulator. Every routing mode borrows the speeds of
/// exactly one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentClass {
    Pedestrian,
    Bicycle,
    Car,
}

impl AgentClass {
    pub const ALL: [AgentClass; 3] = [AgentClass::Pedestrian, AgentClass::Bicycle, AgentClass::Car];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgentClass::Pedestrian => "pedestrian",
            AgentClass::Bicycle => "bicycle",
            AgentClass::Car => "car",
        }
    }
}

impl fmt::Display for AgentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Routing mode offered to travellers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportMode {
    Walk,
    EBike,
    EScooter,
    ECar,
}

impl TransportMode {
    pub const ALL: [TransportMode; 4] = [
        TransportMode::Walk,
        TransportMode::EBike,
        TransportMode::EScooter,
        TransportMode::ECar,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn agent_class(self) -> AgentClass {
        match self {
            TransportMode::Walk => AgentClass::Pedestrian,
            TransportMode::EBike | TransportMode::EScooter => AgentClass::Bicycle,
            TransportMode::ECar => AgentClass::Car,
        }
    }

    /// The shared vehicle a mode requires, `None` for walking.
    pub fn vehicle(self) -> Option<VehicleType> {
        match self {
            TransportMode::Walk => None,
            TransportMode::EBike => Some(VehicleType::EBike),
            TransportMode::EScooter => Some(VehicleType::EScooter),
            TransportMode::ECar => Some(VehicleType::ECar),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TransportMode::Walk => "walk",
            TransportMode::EBike => "ebike",
            TransportMode::EScooter => "escooter",
            TransportMode::ECar => "ecar",
        }
    }
}

impl fmt::Display for TransportMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransportMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TransportMode::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown transport mode `{s}`"))
    }
}

/// Vehicle kinds docked at eHubs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleType {
    EBike,
    EScooter,
    ECar,
}

impl VehicleType {
    pub const ALL: [VehicleType; 3] = [VehicleType::EBike, VehicleType::EScooter, VehicleType::ECar];

    pub fn mode(self) -> TransportMode {
        match self {
            VehicleType::EBike => TransportMode::EBike,
            VehicleType::EScooter => TransportMode::EScooter,
            VehicleType::ECar => TransportMode::ECar,
        }
    }

    pub fn as_str(self) -> &'static str {
        self.mode().as_str()
    }
}

impl fmt::Display for VehicleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VehicleType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VehicleType::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown vehicle type `{s}`"))
    }
}

/// Fixed-size table indexed by [`AgentClass`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerClass<T>(pub [T; 3]);

impl<T> PerClass<T> {
    pub fn from_fn(mut f: impl FnMut(AgentClass) -> T) -> Self {
        PerClass(AgentClass::ALL.map(&mut f))
    }

    pub fn iter(&self) -> impl Iterator<Item = (AgentClass, &T)> {
        AgentClass::ALL.into_iter().zip(self.0.iter())
    }
}

impl<T> Index<AgentClass> for PerClass<T> {
    type Output = T;

    fn index(&self, class: AgentClass) -> &T {
        &self.0[class.index()]
    }
}

impl<T> IndexMut<AgentClass> for PerClass<T> {
    fn index_mut(&mut self, class: AgentClass) -> &mut T {
        &mut self.0[class.index()]
    }
}

impl<T: Serialize> Serialize for PerClass<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for PerClass<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        <[T; 3]>::deserialize(d).map(PerClass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_mode_has_one_speed_class() {
        assert_eq!(TransportMode::Walk.agent_class(), AgentClass::Pedestrian);
        assert_eq!(TransportMode::EBike.agent_class(), AgentClass::Bicycle);
        assert_eq!(TransportMode::EScooter.agent_class(), AgentClass::Bicycle);
        assert_eq!(TransportMode::ECar.agent_class(), AgentClass::Car);
    }

    #[test]
    fn vehicles_round_trip_through_modes() {
        for v in VehicleType::ALL {
            assert_eq!(v.mode().vehicle(), Some(v));
        }
        assert_eq!(TransportMode::Walk.vehicle(), None);
        assert_eq!("EScooter".parse::<TransportMode>().unwrap(), TransportMode::EScooter);
        assert!("tram".parse::<TransportMode>().is_err());
    }
}
