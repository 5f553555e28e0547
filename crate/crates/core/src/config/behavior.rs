use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::vehicle::Condition;
use super::{parse_yaml, ConfigError};
use crate::geometry::Vec2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptDef {
    pub key: String,
    pub speed: f64,
    /// Ground waypoints; empty means the event has no motion.
    #[serde(default)]
    pub path: Vec<[f64; 2]>,
    #[serde(default)]
    pub overhead_load: bool,
    /// Whether the vehicle body sweeps the ground (and can hit loose pipes).
    #[serde(default = "yes")]
    pub ground: bool,
}

fn yes() -> bool {
    true
}

/// Motion scripts for one vehicle, keyed by handler key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorConfig {
    pub vehicle: String,
    /// Parking pose: x, y, heading.
    pub start: [f64; 3],
    /// Axis-aligned half extents.
    pub footprint: [f64; 2],
    pub scripts: Vec<ScriptDef>,
}

impl BehaviorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(format!("behaviors for `{}`: {m}", self.vehicle)));
        if !self.start.iter().all(|v| v.is_finite()) {
            return bad("start is not finite".into());
        }
        if !self.footprint.iter().all(|v| v.is_finite() && *v > 0.0) {
            return bad("footprint half extents must be positive".into());
        }
        for s in &self.scripts {
            if !(s.speed.is_finite() && s.speed >= 0.0) {
                return bad(format!("{}: speed must be non-negative", s.key));
            }
            if !s.path.iter().flatten().all(|v| v.is_finite()) {
                return bad(format!("{}: path is not finite", s.key));
            }
            match parse_handler_key(&s.key) {
                Some((vehicle, _, _)) if vehicle == self.vehicle => {}
                _ => {
                    return bad(format!(
                        "{}: key must be `{}_<normals|accidents>_<id>`",
                        s.key, self.vehicle
                    ))
                }
            }
        }
        Ok(())
    }
}

pub fn load_behaviors(yaml_text: &str) -> Result<BehaviorConfig, ConfigError> {
    let b: BehaviorConfig = parse_yaml(yaml_text)?;
    b.validate()?;
    Ok(b)
}

/// `<Vehicle>_<normals|accidents>_<id>`
pub fn handler_key(vehicle: &str, condition: Condition, id: u32) -> String {
    format!("{vehicle}_{}_{id}", condition.partition())
}

pub fn parse_handler_key(key: &str) -> Option<(&str, Condition, u32)> {
    let (rest, id) = key.rsplit_once('_')?;
    let (vehicle, partition) = rest.rsplit_once('_')?;
    let condition = match partition {
        "normals" => Condition::Normal,
        "accidents" => Condition::Accident,
        _ => return None,
    };
    Some((vehicle, condition, id.parse().ok()?))
}

/// What a handler does when its event fires.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorScript {
    pub id: String,
    pub vehicle: String,
    pub speed: f64,
    pub path: Vec<Vec2>,
    pub overhead_load: bool,
    pub ground: bool,
}

impl BehaviorScript {
    pub fn is_noop(&self) -> bool {
        self.path.is_empty()
    }
}

/// Explicit binding of handler keys to behavior scripts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HandlerRegistry {
    handlers: BTreeMap<String, BehaviorScript>,
}

impl HandlerRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_behaviors(configs: &[BehaviorConfig]) -> Result<Self, ConfigError> {
        let mut reg = HandlerRegistry::new();
        for c in configs {
            for s in &c.scripts {
                let script = BehaviorScript {
                    id: s.key.clone(),
                    vehicle: c.vehicle.clone(),
                    speed: s.speed,
                    path: s.path.iter().map(|&p| Vec2::from(p)).collect(),
                    overhead_load: s.overhead_load,
                    ground: s.ground,
                };
                if reg.register(s.key.clone(), script).is_some() {
                    return Err(ConfigError::Invalid(format!(
                        "handler `{}` is defined more than once",
                        s.key
                    )));
                }
            }
        }
        Ok(reg)
    }

    /// Bind a key, returning the previous binding if any.
    pub fn register(&mut self, key: String, script: BehaviorScript) -> Option<BehaviorScript> {
        self.handlers.insert(key, script)
    }

    pub fn get(&self, key: &str) -> Option<&BehaviorScript> {
        self.handlers.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.handlers.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.handlers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.handlers.is_empty()
    }
}

pub fn resolve_handler<'r>(
    vehicle: &str,
    condition: Condition,
    id: u32,
    registry: &'r HandlerRegistry,
) -> Result<&'r BehaviorScript, ConfigError> {
    let key = handler_key(vehicle, condition, id);
    registry.get(&key).ok_or(ConfigError::UnboundHandler { key })
}
