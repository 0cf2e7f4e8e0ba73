use serde::{Deserialize, Serialize};

use crate::network::{Edge, TransportMode};

/// Per-km consumption `base + coeff · v²` for one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEnergy {
    pub base_wh_per_km: f64,
    /// Wh·s²/(km·m²)
    #[serde(default)]
    pub speed_coeff: f64,
}

impl ModeEnergy {
    pub const fn flat(base_wh_per_km: f64) -> Self {
        ModeEnergy { base_wh_per_km, speed_coeff: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyModelParams {
    pub ebike: ModeEnergy,
    pub escooter: ModeEnergy,
    pub ecar: ModeEnergy,
}

impl Default for EnergyModelParams {
    fn default() -> Self {
        EnergyModelParams {
            ebike: ModeEnergy::flat(10.0),
            escooter: ModeEnergy::flat(15.0),
            ecar: ModeEnergy::flat(150.0),
        }
    }
}

impl EnergyModelParams {
    /// `None` for walking.
    pub fn mode(&self, mode: TransportMode) -> Option<&ModeEnergy> {
        match mode {
            TransportMode::Walk => None,
            TransportMode::EBike => Some(&self.ebike),
            TransportMode::EScooter => Some(&self.escooter),
            TransportMode::ECar => Some(&self.ecar),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, m) in [("ebike", self.ebike), ("escooter", self.escooter), ("ecar", self.ecar)] {
            if !(m.base_wh_per_km >= 0.0 && m.base_wh_per_km.is_finite()) {
                return Err(format!("{name}.base_wh_per_km must be >= 0"));
            }
            if !(m.speed_coeff >= 0.0 && m.speed_coeff.is_finite()) {
                return Err(format!("{name}.speed_coeff must be >= 0"));
            }
        }
        Ok(())
    }
}

/// Watt-hours to traverse `edge` in `mode` at `speed` m/s.
pub fn energy_cost(edge: &Edge, mode: TransportMode, speed: f64, params: &EnergyModelParams) -> f64 {
    match params.mode(mode) {
        None => 0.0,
        Some(m) => (m.base_wh_per_km + m.speed_coeff * speed * speed) * edge.length / 1000.0,
    }
}
