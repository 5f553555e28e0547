use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{parse_yaml, ConfigError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    Normal,
    Accident,
}

impl Condition {
    /// Name of the partition that holds events of this condition.
    pub fn partition(self) -> &'static str {
        match self {
            Condition::Normal => "normals",
            Condition::Accident => "accidents",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Normal => "Normal",
            Condition::Accident => "Accident",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventDef {
    pub id: u32,
    pub condition: Condition,
    pub desc: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleEvents {
    #[serde(default)]
    pub normals: Vec<EventDef>,
    #[serde(default)]
    pub accidents: Vec<EventDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    pub name: String,
    pub desc: String,
    #[serde(rename = "gameObject")]
    pub game_object: String,
    pub events: VehicleEvents,
}

impl VehicleConfig {
    pub fn partition(&self, condition: Condition) -> &[EventDef] {
        match condition {
            Condition::Normal => &self.events.normals,
            Condition::Accident => &self.events.accidents,
        }
    }

    pub fn event(&self, condition: Condition, id: u32) -> Option<&EventDef> {
        self.partition(condition).iter().find(|e| e.id == id)
    }

    pub fn event_count(&self) -> usize {
        self.events.normals.len() + self.events.accidents.len()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.trim().is_empty() {
            return Err(ConfigError::Invalid("vehicle name is empty".into()));
        }
        for condition in [Condition::Normal, Condition::Accident] {
            let mut seen = BTreeSet::new();
            for (index, ev) in self.partition(condition).iter().enumerate() {
                if ev.condition != condition {
                    return Err(ConfigError::ConditionMismatch {
                        vehicle: self.name.clone(),
                        partition: condition.partition(),
                        index,
                        found: ev.condition,
                    });
                }
                if ev.id == 0 {
                    return Err(ConfigError::Invalid(format!(
                        "{} {}[{index}]: event ids are positive",
                        self.name,
                        condition.partition()
                    )));
                }
                if !seen.insert(ev.id) {
                    return Err(ConfigError::DuplicateId {
                        vehicle: self.name.clone(),
                        partition: condition.partition(),
                        id: ev.id,
                    });
                }
                if ev.warning.as_deref().is_some_and(|w| w.trim().is_empty()) {
                    return Err(ConfigError::Invalid(format!(
                        "{} {}[{index}]: warning is present but empty",
                        self.name,
                        condition.partition()
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn load_vehicle_config(yaml_text: &str) -> Result<VehicleConfig, ConfigError> {
    let v: VehicleConfig = parse_yaml(yaml_text)?;
    v.validate()?;
    Ok(v)
}
