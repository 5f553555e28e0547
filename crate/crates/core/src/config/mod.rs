//! YAML configuration: vehicles, scenarios, sessions, tasks, layouts, menus and
//! vehicle behavior scripts.

mod behavior;
mod layout;
mod menu;
mod scenario;
mod session;
mod set;
mod task;
mod vehicle;

use std::fmt;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use thiserror::Error;

pub use behavior::{
    handler_key, load_behaviors, parse_handler_key, resolve_handler, BehaviorConfig, BehaviorScript, HandlerRegistry,
    ScriptDef,
};
pub use layout::{load_layout, LayoutSlot, Marker, MarkerKind, Orientation, TargetLayout};
pub use menu::{load_menu, MenuActionKind, MenuConfig, MenuItem};
pub use scenario::{load_scenario, ScenarioConfig, ScenarioEntry};
pub use session::{load_session, SessionConfig, StageConfig};
pub use set::{merge_rules, ConfigSet, SessionBundle, Stage, StageKind};
pub use task::{load_task, SegmentField, SegmentSpec, SiteConfig, StockItem, TaskConfig, TaskRules};
pub use vehicle::{load_vehicle_config, Condition, EventDef, VehicleConfig, VehicleEvents};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("schema error: {message}")]
    Schema { line: Option<usize>, message: String },
    #[error("duplicate event id {id} in {vehicle} {partition}")]
    DuplicateId {
        vehicle: String,
        partition: &'static str,
        id: u32,
    },
    #[error("{vehicle} {partition}[{index}] has condition {found}, which does not match its partition")]
    ConditionMismatch {
        vehicle: String,
        partition: &'static str,
        index: usize,
        found: Condition,
    },
    #[error("scenario `{scenario}` events[{index}]: unknown vehicle `{vehicle}`")]
    UnknownVehicle {
        scenario: String,
        index: usize,
        vehicle: String,
    },
    #[error("scenario `{scenario}` events[{index}]: {vehicle} has no {condition} event {id}")]
    UnknownEvent {
        scenario: String,
        index: usize,
        vehicle: String,
        condition: Condition,
        id: u32,
    },
    #[error("no behavior is bound to handler `{key}`")]
    UnboundHandler { key: String },
    /// A segment field that no role can see.
    #[error("segment {segment}: field `{field}` is visible to neither role")]
    VisibilityOverlap { segment: u32, field: SegmentField },
    #[error("{from} references unknown {kind} `{name}`")]
    UnknownReference {
        kind: &'static str,
        name: String,
        from: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("{}", InFileDisplay(path, source))]
    InFile { path: PathBuf, source: Box<ConfigError> },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

struct InFileDisplay<'a>(&'a PathBuf, &'a ConfigError);

impl fmt::Display for InFileDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.1 {
            ConfigError::Schema { line: Some(line), .. } => write!(f, "{}:{}: {}", self.0.display(), line, self.1),
            other => write!(f, "{}: {}", self.0.display(), other),
        }
    }
}

impl ConfigError {
    pub fn in_file(self, path: impl Into<PathBuf>) -> ConfigError {
        match self {
            e @ ConfigError::InFile { .. } => e,
            e => ConfigError::InFile {
                path: path.into(),
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, without file context.
    pub fn root(&self) -> &ConfigError {
        match self {
            ConfigError::InFile { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self.root() {
            ConfigError::Schema { line, .. } => *line,
            _ => None,
        }
    }
}

pub(crate) fn parse_yaml<T: DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    serde_yaml::from_str(text).map_err(|e| ConfigError::Schema {
        line: e.location().map(|l| l.line()),
        message: e.to_string(),
    })
}
