//! The authoritative task world: entities, intents, machines and completion.

mod apply;
mod completion;
mod intent;
mod jobs;
mod view;
mod world;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Condition, MenuConfig, TaskConfig};
use crate::geometry::{Haptic, Vec2, WallPlane};
use crate::types::{Diameter, EntityId, Length, Role};

pub use apply::apply_intent;
pub use completion::{check_completion, slot_mismatches, CompletionReport, Mismatch, SlotMatch};
pub use intent::{ConnectorRequest, CutRequest, Intent, IntentKind, LiftDir, OrderItem, Supply, MAX_ORDER_QTY};
pub use jobs::{process_due_jobs, Job, PendingJob};
pub use view::{role_view, FilteredView, SegmentView};
pub(crate) use world::overlaps;
pub use world::{
    find_free_spot, Clamp, EndRef, Entity, Part, PartKind, PartStatus, Participant, ScissorLift, WorldMeta, WorldState,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error("{role} may not send {kind}")]
    RoleViolation { role: Role, kind: IntentKind },
    #[error("{entity} is held by the {holder}")]
    HeldConflict { entity: EntityId, holder: Role },
    #[error("{0}")]
    Precondition(String),
    #[error("target at height {height:.2} is above reach {reach:.2}")]
    OutOfReach { height: f64, reach: f64 },
    #[error("glue is empty; ask for a refill")]
    NoGlue,
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: Diameter, got: Diameter },
    #[error("end {0:?} is not glued")]
    NotGlued(EndRef),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("cannot cut {requested} from a pipe of length {available}")]
    Length { requested: Length, available: Length },
    #[error("not in the lift")]
    NotInLift,
    #[error("out of bounds: {0}")]
    OutOfBounds(String),
    #[error("no entity {0}")]
    UnknownEntity(EntityId),
}

impl TaskError {
    /// Stable code used on the wire and in action logs.
    pub fn code(&self) -> &'static str {
        match self {
            TaskError::RoleViolation { .. } => "RoleViolationError",
            TaskError::HeldConflict { .. } => "HeldConflictError",
            TaskError::Precondition(_) => "PreconditionError",
            TaskError::OutOfReach { .. } => "OutOfReachError",
            TaskError::NoGlue => "NoGlueError",
            TaskError::SizeMismatch { .. } => "SizeMismatchError",
            TaskError::NotGlued(_) => "NotGluedError",
            TaskError::InvalidSpec(_) => "InvalidSpecError",
            TaskError::Length { .. } => "LengthError",
            TaskError::NotInLift => "NotInLiftError",
            TaskError::OutOfBounds(_) => "OutOfBoundsError",
            TaskError::UnknownEntity(_) => "UnknownEntityError",
        }
    }
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T, TaskError> {
    Err(TaskError::Precondition(msg.into()))
}

/// Feedback addressed to participants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "signal", rename_all = "snake_case")]
pub enum Signal {
    Warning { text: String },
    Haptic { to: Role, pulse: Haptic },
}

/// Things that happened but are not world state: they ride the delta stream as log entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "note", rename_all = "snake_case")]
pub enum Note {
    Chat {
        role: Role,
        text: String,
    },
    NpcRequest {
        role: Role,
        item: String,
        label: String,
    },
    MenuOpened {
        role: Role,
        item: String,
    },
    EventFired {
        vehicle: String,
        condition: Condition,
        event_id: u32,
        warning: Option<String>,
    },
    PipeDisplaced {
        part: EntityId,
        vehicle: String,
        from: Vec2,
        to: Vec2,
    },
    Delivered {
        parts: Vec<EntityId>,
    },
    Cut {
        part: EntityId,
        remainder: Option<EntityId>,
        scrap: Option<Length>,
    },
}

/// What a successful intent produced besides the state change.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Applied {
    pub signals: Vec<Signal>,
    pub notes: Vec<Note>,
}

/// Static inputs an intent is checked against.
#[derive(Debug, Clone, Copy)]
pub struct TaskContext<'a> {
    pub task: &'a TaskConfig,
    pub menu: &'a MenuConfig,
    pub wall: WallPlane,
    pub tick_rate_hz: u32,
}

impl<'a> TaskContext<'a> {
    pub fn new(task: &'a TaskConfig, menu: &'a MenuConfig, tick_rate_hz: u32) -> Self {
        TaskContext {
            task,
            menu,
            wall: WallPlane::site(),
            tick_rate_hz,
        }
    }

    pub fn seconds_to_ticks(&self, s: f64) -> u64 {
        (s * self.tick_rate_hz as f64).round().max(0.0) as u64
    }
}
