use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::task::TaskConfig;
use super::{parse_yaml, ConfigError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutSlot {
    pub index: u32,
    pub orientation: Orientation,
    /// Segment center in wall coordinates (u, v).
    pub anchor: [f64; 2],
    #[serde(default)]
    pub connects_to: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerKind {
    /// Where a run of pipe terminates.
    Endpoint,
    /// A pipe entering the wall from a box not part of the task.
    Box,
}

/// Drawing annotation; has no effect on matching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Marker {
    pub kind: MarkerKind,
    pub at: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetLayout {
    pub name: String,
    pub slots: Vec<LayoutSlot>,
    #[serde(default)]
    pub markers: Vec<Marker>,
}

impl TargetLayout {
    pub fn slot(&self, index: u32) -> Option<&LayoutSlot> {
        self.slots.iter().find(|s| s.index == index)
    }

    /// Undirected adjacency edges as (lower, higher) slot index pairs, sorted.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let set: BTreeSet<(u32, u32)> = self
            .slots
            .iter()
            .flat_map(|s| s.connects_to.iter().map(move |&t| (s.index.min(t), s.index.max(t))))
            .collect();
        set.into_iter().collect()
    }

    pub fn neighbors(&self, index: u32) -> Vec<u32> {
        self.edges()
            .into_iter()
            .filter_map(|(a, b)| {
                if a == index {
                    Some(b)
                } else if b == index {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (i, s) in self.slots.iter().enumerate() {
            if s.index != i as u32 + 1 {
                return Err(ConfigError::Invalid(format!(
                    "layout `{}`: slot indices must run 1..n in order",
                    self.name
                )));
            }
            if !(s.anchor[0].is_finite() && s.anchor[1].is_finite()) {
                return Err(ConfigError::Invalid(format!(
                    "layout `{}` slot {}: anchor is not finite",
                    self.name, s.index
                )));
            }
            for &t in &s.connects_to {
                if t == s.index || t == 0 || t as usize > self.slots.len() {
                    return Err(ConfigError::Invalid(format!(
                        "layout `{}` slot {}: bad connects_to entry {t}",
                        self.name, s.index
                    )));
                }
            }
        }
        Ok(())
    }

    /// Slots must line up one-to-one with task segments, and every junction must be a
    /// perpendicular join of equal diameters so that a connector can realise it.
    pub fn check_against(&self, task: &TaskConfig) -> Result<(), ConfigError> {
        if self.slots.len() != task.segments.len() {
            return Err(ConfigError::Invalid(format!(
                "layout `{}` has {} slots but task `{}` has {} segments",
                self.name,
                self.slots.len(),
                task.name,
                task.segments.len()
            )));
        }
        for (a, b) in self.edges() {
            let (sa, sb) = (self.slot(a).unwrap(), self.slot(b).unwrap());
            if sa.orientation == sb.orientation {
                return Err(ConfigError::Invalid(format!(
                    "layout `{}`: slots {a} and {b} are joined but not perpendicular",
                    self.name
                )));
            }
            let (da, db) = (task.segment(a).unwrap().size, task.segment(b).unwrap().size);
            if da != db {
                return Err(ConfigError::Invalid(format!(
                    "layout `{}`: slots {a} and {b} are joined but task `{}` gives different sizes",
                    self.name, task.name
                )));
            }
        }
        Ok(())
    }
}

pub fn load_layout(yaml_text: &str) -> Result<TargetLayout, ConfigError> {
    let l: TargetLayout = parse_yaml(yaml_text)?;
    l.validate()?;
    Ok(l)
}
