use serde::{Deserialize, Serialize};

use super::vehicle::{Condition, VehicleConfig};
use super::{parse_yaml, ConfigError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    /// Seconds after the stage starts.
    pub time: f64,
    pub vehicle: String,
    pub condition: Condition,
    pub id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub desc: Option<String>,
    pub events: Vec<ScenarioEntry>,
}

impl ScenarioConfig {
    pub fn validate(&self, vehicles: &[VehicleConfig]) -> Result<(), ConfigError> {
        for (index, e) in self.events.iter().enumerate() {
            if !e.time.is_finite() || e.time < 0.0 {
                return Err(ConfigError::Invalid(format!(
                    "scenario `{}` events[{index}]: time must be a non-negative number of seconds",
                    self.name
                )));
            }
            let vehicle = vehicles
                .iter()
                .find(|v| v.name == e.vehicle)
                .ok_or_else(|| ConfigError::UnknownVehicle {
                    scenario: self.name.clone(),
                    index,
                    vehicle: e.vehicle.clone(),
                })?;
            if vehicle.event(e.condition, e.id).is_none() {
                return Err(ConfigError::UnknownEvent {
                    scenario: self.name.clone(),
                    index,
                    vehicle: e.vehicle.clone(),
                    condition: e.condition,
                    id: e.id,
                });
            }
        }
        Ok(())
    }
}

pub fn load_scenario(yaml_text: &str, vehicles: &[VehicleConfig]) -> Result<ScenarioConfig, ConfigError> {
    let s: ScenarioConfig = parse_yaml(yaml_text)?;
    s.validate(vehicles)?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load_vehicle_config;

    fn crane() -> Vec<VehicleConfig> {
        vec![load_vehicle_config(include_str!("../../../../config/vehicles/crane.yaml")).unwrap()]
    }

    #[test]
    fn resolves_listing_ids() {
        let s = load_scenario(
            "name: s\nevents:\n  - {time: 5.0, vehicle: Crane, condition: Normal, id: 1}\n",
            &crane(),
        )
        .unwrap();
        assert_eq!(s.events.len(), 1);
        assert_eq!(s.events[0].time, 5.0);
    }

    #[test]
    fn empty_scenario_is_valid() {
        assert!(load_scenario("name: s\nevents: []\n", &crane())
            .unwrap()
            .events
            .is_empty());
    }

    #[test]
    fn unknown_references() {
        let err = load_scenario(
            "name: s\nevents:\n  - {time: 1, vehicle: Crane, condition: Normal, id: 99}\n",
            &crane(),
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::UnknownEvent { id: 99, .. }));
        let err = load_scenario(
            "name: s\nevents:\n  - {time: 1, vehicle: Bulldozer, condition: Normal, id: 1}\n",
            &crane(),
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::UnknownVehicle { .. }));
        let err = load_scenario(
            "name: s\nevents:\n  - {time: -1, vehicle: Crane, condition: Normal, id: 1}\n",
            &crane(),
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
    }
}
