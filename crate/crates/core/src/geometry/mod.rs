//! Pipe mathematics in the wall plane.

pub mod check;
mod clamp;
mod pipe;
mod vec;
mod wall;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use clamp::{clamp_fit, clamp_zones, ClampFit, ClampZone, WallPipe, ZONE_FRACTIONS};
pub use pipe::{
    connect_transform, connector_geometry, end_frame, generate_pipe, joint_residual, Assembly, AssemblyJoint,
    AssemblyMember, EndFrame, PipeEnd, PipeGeometry, PipeSpec,
};
pub use vec::{angle_distance, normalize_angle, Pose2, Vec2, Vec3};
pub use wall::{
    compensate_to_wall, shift_holding_point, snap_orientation, HoldingPoint, JoystickInput, RawPose, Snap, WallPlane,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Haptic {
    /// Orientation snapped onto the wall grid.
    Long,
    /// Clamp seated in its zone.
    Short,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid pipe spec: {0}")]
    InvalidSpec(String),
    #[error("pipe is not on the wall")]
    NotOnWall,
    #[error("clamp zones are only defined for straight pipes")]
    NotStraight,
    #[error("wall plane axes are degenerate")]
    DegeneratePlane,
    #[error("no assembly member {0}")]
    UnknownMember(usize),
    #[error("end {end:?} of member {member} is already joined")]
    EndOccupied { member: usize, end: PipeEnd },
}
