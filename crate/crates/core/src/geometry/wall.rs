use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::vec::{angle_distance, normalize_angle, Pose2, Vec2, Vec3};
use super::{GeometryError, Haptic};

/// A planar wall. `u_axis` runs along the wall, `v_axis` up it, and `normal`
/// (v x u) points into the room.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallPlane {
    pub origin: Vec3,
    pub u_axis: Vec3,
    pub v_axis: Vec3,
    pub normal: Vec3,
}

impl WallPlane {
    pub fn new(origin: Vec3, u_axis: Vec3, v_axis: Vec3) -> Result<Self, GeometryError> {
        if !origin.is_finite() || !u_axis.is_finite() || !v_axis.is_finite() {
            return Err(GeometryError::DegeneratePlane);
        }
        let u = u_axis.normalized();
        if u_axis.length() < 1e-9 {
            return Err(GeometryError::DegeneratePlane);
        }
        let v_perp = v_axis - u * v_axis.dot(u);
        if v_perp.length() < 1e-9 {
            return Err(GeometryError::DegeneratePlane);
        }
        let v = v_perp.normalized();
        Ok(WallPlane {
            origin,
            u_axis: u,
            v_axis: v,
            normal: v.cross(u),
        })
    }

    /// The site wall: x along the wall, z up, room on +y.
    pub fn site() -> Self {
        WallPlane::new(
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        )
        .expect("site wall is well formed")
    }

    pub fn to_world(&self, p: Vec2) -> Vec3 {
        self.origin + self.u_axis * p.x + self.v_axis * p.y
    }

    pub fn project(&self, p: Vec3) -> Vec2 {
        let d = p - self.origin;
        Vec2::new(d.dot(self.u_axis), d.dot(self.v_axis))
    }

    /// Distance from the wall on the room side (negative behind it).
    pub fn distance(&self, p: Vec3) -> f64 {
        (p - self.origin).dot(self.normal)
    }

    /// Raw 3D pose of an object lying flat on the wall at `pose`.
    pub fn embed(&self, pose: &Pose2) -> RawPose {
        let (s, c) = pose.theta.sin_cos();
        RawPose {
            position: self.to_world(pose.translation()),
            axis: self.u_axis * c + self.v_axis * s,
        }
    }
}

/// Unconstrained 3D placement of a held object: hand position and pipe axis direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawPose {
    pub position: Vec3,
    pub axis: Vec3,
}

impl RawPose {
    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.axis.is_finite()
    }
}

/// Project a raw pose onto the wall, dropping the off-plane component.
pub fn compensate_to_wall(raw: &RawPose, wall: &WallPlane) -> Pose2 {
    let p = wall.project(raw.position);
    let a = raw.axis.dot(wall.u_axis);
    let b = raw.axis.dot(wall.v_axis);
    let theta = if a.hypot(b) < 1e-12 { 0.0 } else { b.atan2(a) };
    Pose2::new(p.x, p.y, theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snap {
    pub theta: f64,
    pub snapped: bool,
}

impl Snap {
    pub fn signal(&self) -> Option<Haptic> {
        self.snapped.then_some(Haptic::Long)
    }
}

/// Snap to the nearest horizontal/vertical orientation when within `tol` radians.
pub fn snap_orientation(theta: f64, tol: f64) -> Snap {
    let k = (theta / FRAC_PI_2).round();
    let target = normalize_angle(k * FRAC_PI_2);
    if angle_distance(theta, target) <= tol {
        Snap {
            theta: target,
            snapped: true,
        }
    } else {
        Snap {
            theta: normalize_angle(theta),
            snapped: false,
        }
    }
}

/// Where along the pipe the hand grips it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoldingPoint {
    LeftEnd,
    #[default]
    Middle,
    RightEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JoystickInput {
    Left,
    Right,
    Press,
}

impl HoldingPoint {
    /// Offset from the hand to the pipe center along the pipe axis.
    pub fn center_offset(self, length: f64) -> f64 {
        match self {
            HoldingPoint::LeftEnd => length / 2.0,
            HoldingPoint::Middle => 0.0,
            HoldingPoint::RightEnd => -length / 2.0,
        }
    }
}

/// Joystick right slides the grip to the left end, left to the right end, press recentres.
/// Repeating an input keeps the grip where it is.
pub fn shift_holding_point(_current: HoldingPoint, input: JoystickInput) -> HoldingPoint {
    match input {
        JoystickInput::Press => HoldingPoint::Middle,
        JoystickInput::Right => HoldingPoint::LeftEnd,
        JoystickInput::Left => HoldingPoint::RightEnd,
    }
}
