use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{parse_yaml, ConfigError};
use crate::types::{Diameter, Length, PipeColor, PipeKind, Role};

/// One of the four attributes a segment can reveal to a role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentField {
    Color,
    Type,
    Size,
    Length,
}

impl SegmentField {
    pub const ALL: [SegmentField; 4] = [
        SegmentField::Color,
        SegmentField::Type,
        SegmentField::Size,
        SegmentField::Length,
    ];
}

impl fmt::Display for SegmentField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SegmentField::Color => "color",
            SegmentField::Type => "type",
            SegmentField::Size => "size",
            SegmentField::Length => "length",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub index: u32,
    pub color: PipeColor,
    #[serde(rename = "type")]
    pub kind: PipeKind,
    pub size: Diameter,
    pub length: Length,
    pub installer: Vec<SegmentField>,
    pub fetcher: Vec<SegmentField>,
}

impl SegmentSpec {
    pub fn visible_to(&self, role: Role) -> &[SegmentField] {
        match role {
            Role::Installer => &self.installer,
            Role::Fetcher => &self.fetcher,
        }
    }
}

/// Pipes lying in the storage area when a stage starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StockItem {
    #[serde(rename = "type")]
    pub kind: PipeKind,
    pub color: PipeColor,
    pub size: Diameter,
    pub length: Length,
    #[serde(default = "one")]
    pub qty: u32,
}

fn one() -> u32 {
    1
}

/// Tunable task rules. Every field has a default and may be overridden per session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskRules {
    pub snap_tol_deg: f64,
    pub clamp_tol: f64,
    pub reach_height: f64,
    /// A held pipe touches the wall when its hand is this close to it.
    pub touch_dist: f64,
    pub length_tol: f64,
    pub min_piece: f64,
    pub order_delay_s: f64,
    pub cut_delay_s: f64,
    pub initial_glue: u32,
    pub glue_refill: u32,
    pub initial_clamps: u32,
    pub clamp_refill: u32,
    pub lift_step: f64,
    pub lift_max_height: f64,
    pub lift_proximity: f64,
    pub scatter_radius: f64,
}

impl Default for TaskRules {
    fn default() -> Self {
        TaskRules {
            snap_tol_deg: 5.0,
            clamp_tol: 0.25,
            reach_height: 2.0,
            touch_dist: 0.3,
            length_tol: 0.25,
            min_piece: 0.5,
            order_delay_s: 5.0,
            cut_delay_s: 5.0,
            initial_glue: 6,
            glue_refill: 5,
            initial_clamps: 4,
            clamp_refill: 4,
            lift_step: 0.5,
            lift_max_height: 12.0,
            lift_proximity: 1.5,
            scatter_radius: 3.0,
        }
    }
}

impl TaskRules {
    pub fn snap_tol_rad(&self) -> f64 {
        self.snap_tol_deg.to_radians()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |what: &str| Err(ConfigError::Invalid(format!("rules: {what}")));
        if !(0.0..22.5).contains(&self.snap_tol_deg) {
            return bad("snap_tol_deg must be in [0, 22.5)");
        }
        let positive = [
            ("clamp_tol", self.clamp_tol),
            ("reach_height", self.reach_height),
            ("touch_dist", self.touch_dist),
            ("min_piece", self.min_piece),
            ("lift_step", self.lift_step),
            ("lift_proximity", self.lift_proximity),
            ("scatter_radius", self.scatter_radius),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be positive"));
            }
        }
        let non_negative = [
            ("length_tol", self.length_tol),
            ("order_delay_s", self.order_delay_s),
            ("cut_delay_s", self.cut_delay_s),
            ("lift_max_height", self.lift_max_height),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return bad(&format!("{name} must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Ground-plane layout of the site. Ground coordinates are (x, y) with the wall
/// along y = 0 and the room at y > 0; x matches the wall's u axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiteConfig {
    pub storage_min: [f64; 2],
    pub storage_max: [f64; 2],
    /// Range of u the lift can travel along the wall.
    pub wall_span: [f64; 2],
    pub lift_start_u: f64,
    /// Distance of the lift platform from the wall.
    pub lift_y: f64,
    pub installer_start: [f64; 2],
    pub fetcher_start: [f64; 2],
}

impl Default for SiteConfig {
    fn default() -> Self {
        SiteConfig {
            storage_min: [-30.0, 4.0],
            storage_max: [-4.0, 10.0],
            wall_span: [-2.0, 48.0],
            lift_start_u: 0.0,
            lift_y: 1.0,
            installer_start: [0.0, 2.0],
            fetcher_start: [-8.0, 3.0],
        }
    }
}

impl SiteConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let ok = self.storage_min[0] < self.storage_max[0]
            && self.storage_min[1] < self.storage_max[1]
            && self.wall_span[0] < self.wall_span[1]
            && (self.wall_span[0]..=self.wall_span[1]).contains(&self.lift_start_u)
            && self.lift_y > 0.0;
        if ok {
            Ok(())
        } else {
            Err(ConfigError::Invalid(
                "site: storage area, wall span or lift start is malformed".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub name: String,
    pub layout: String,
    pub menu: String,
    #[serde(default)]
    pub rules: TaskRules,
    #[serde(default)]
    pub site: SiteConfig,
    pub segments: Vec<SegmentSpec>,
    #[serde(default)]
    pub storage: Vec<StockItem>,
}

impl TaskConfig {
    pub fn segment(&self, index: u32) -> Option<&SegmentSpec> {
        self.segments.iter().find(|s| s.index == index)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.segments.is_empty() {
            return Err(ConfigError::Invalid(format!("task `{}` has no segments", self.name)));
        }
        for (i, s) in self.segments.iter().enumerate() {
            let want = i as u32 + 1;
            if s.index != want {
                return Err(ConfigError::Invalid(format!(
                    "task `{}`: segment indices must run 1..n in order (found {} at position {want})",
                    self.name, s.index
                )));
            }
            if s.length == Length::ZERO {
                return Err(ConfigError::Invalid(format!(
                    "task `{}` segment {}: length must be positive",
                    self.name, s.index
                )));
            }
            for (role, fields) in [("installer", &s.installer), ("fetcher", &s.fetcher)] {
                let unique: BTreeSet<_> = fields.iter().collect();
                if unique.len() != fields.len() {
                    return Err(ConfigError::Invalid(format!(
                        "task `{}` segment {}: {role} lists a field twice",
                        self.name, s.index
                    )));
                }
            }
            for field in SegmentField::ALL {
                if !s.installer.contains(&field) && !s.fetcher.contains(&field) {
                    return Err(ConfigError::VisibilityOverlap {
                        segment: s.index,
                        field,
                    });
                }
            }
        }
        for item in &self.storage {
            if item.qty == 0 || item.length == Length::ZERO {
                return Err(ConfigError::Invalid(format!(
                    "task `{}`: storage items need qty >= 1 and a positive length",
                    self.name
                )));
            }
        }
        self.rules.validate()?;
        self.site.validate()
    }
}

pub fn load_task(yaml_text: &str) -> Result<TaskConfig, ConfigError> {
    let t: TaskConfig = parse_yaml(yaml_text)?;
    t.validate()?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn main_task_matches_table() {
        let t = load_task(include_str!("../../../../config/tasks/main.yaml")).unwrap();
        assert_eq!(t.segments.len(), 10);
        let s = &t.segments[0];
        assert_eq!(s.color, PipeColor::Green);
        assert_eq!(s.kind, PipeKind::Gas);
        assert_eq!(s.size.inches(), 1);
        assert_eq!(s.length, Length::from_units(1.0).unwrap());
        assert_eq!(s.installer, vec![SegmentField::Color, SegmentField::Length]);
        assert_eq!(s.fetcher, vec![SegmentField::Size, SegmentField::Type]);
        assert_eq!(t.rules.order_delay_s, 2.0);
        assert_eq!(t.rules.snap_tol_deg, 5.0);
    }

    #[test]
    fn training_task_matches_table() {
        let t = load_task(include_str!("../../../../config/tasks/training.yaml")).unwrap();
        assert_eq!(t.segments.len(), 4);
        let s = &t.segments[0];
        assert_eq!(
            (s.color, s.kind, s.size.inches()),
            (PipeColor::Green, PipeKind::Sewage, 1)
        );
        assert_eq!(s.length, Length::from_units(4.2).unwrap());
        assert_eq!(s.installer, vec![SegmentField::Color, SegmentField::Type]);
        assert_eq!(s.fetcher, vec![SegmentField::Size, SegmentField::Length]);
    }

    #[test]
    fn hidden_field_rejected() {
        let text = "name: t\nlayout: l\nmenu: m\nsegments:\n  - {index: 1, color: green, type: gas, size: 1, length: 1.0, installer: [color], fetcher: [size, type]}\n";
        assert!(matches!(
            load_task(text),
            Err(ConfigError::VisibilityOverlap {
                segment: 1,
                field: SegmentField::Length
            })
        ));
    }

    #[test]
    fn full_information_is_valid() {
        let t = load_task(include_str!("../../../../config/tasks/full_info.yaml")).unwrap();
        assert_eq!(t.segments.len(), 1);
        assert_eq!(t.segments[0].installer.len(), 4);
        assert_eq!(t.segments[0].fetcher.len(), 4);
    }

    #[test]
    fn gaps_in_indices_rejected() {
        let text = "name: t\nlayout: l\nmenu: m\nsegments:\n  - {index: 2, color: green, type: gas, size: 1, length: 1.0, installer: [color, length], fetcher: [size, type]}\n";
        assert!(matches!(load_task(text), Err(ConfigError::Invalid(_))));
    }
}
