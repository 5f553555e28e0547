use serde::{Deserialize, Serialize};

use super::vec::{Pose2, Vec2};
use super::GeometryError;
use crate::types::{BendAngle, Diameter, PipeColor, PipeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PipeEnd {
    A,
    B,
}

impl PipeEnd {
    pub fn other(self) -> PipeEnd {
        match self {
            PipeEnd::A => PipeEnd::B,
            PipeEnd::B => PipeEnd::A,
        }
    }

    pub fn index(self) -> usize {
        match self {
            PipeEnd::A => 0,
            PipeEnd::B => 1,
        }
    }
}

/// Parametric description of a pipe piece. A straight pipe has `angle` 0, `arm_a` equal
/// to its full length and `arm_b` 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipeSpec {
    pub kind: PipeKind,
    pub color: PipeColor,
    pub diameter: Diameter,
    pub angle: BendAngle,
    pub arm_a: f64,
    pub arm_b: f64,
}

impl PipeSpec {
    pub fn straight(kind: PipeKind, color: PipeColor, diameter: Diameter, length: f64) -> Self {
        PipeSpec {
            kind,
            color,
            diameter,
            angle: BendAngle::Straight,
            arm_a: length,
            arm_b: 0.0,
        }
    }
}

/// Pipe end in the pipe's local frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndFrame {
    pub position: Vec2,
    /// Unit vector pointing out of the pipe along its axis.
    pub outward: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipeGeometry {
    pub angle: BendAngle,
    pub arm_a: f64,
    pub arm_b: f64,
    pub end_a: EndFrame,
    pub end_b: EndFrame,
}

impl PipeGeometry {
    pub fn straight(length: f64) -> Result<Self, GeometryError> {
        build(BendAngle::Straight, length, 0.0)
    }

    pub fn is_straight(&self) -> bool {
        self.angle == BendAngle::Straight
    }

    pub fn local_end(&self, end: PipeEnd) -> EndFrame {
        match end {
            PipeEnd::A => self.end_a,
            PipeEnd::B => self.end_b,
        }
    }

    /// Total centerline length.
    pub fn length(&self) -> f64 {
        self.arm_a + self.arm_b
    }

    /// Centerline polyline from end A to end B in local coordinates.
    pub fn centerline(&self) -> Vec<Vec2> {
        if self.is_straight() {
            vec![self.end_a.position, self.end_b.position]
        } else {
            vec![self.end_a.position, Vec2::ZERO, self.end_b.position]
        }
    }
}

/// Local geometry for a pipe spec. Metadata (kind, color, diameter) never changes the shape.
pub fn generate_pipe(spec: &PipeSpec) -> Result<PipeGeometry, GeometryError> {
    build(spec.angle, spec.arm_a, spec.arm_b)
}

fn build(angle: BendAngle, arm_a: f64, arm_b: f64) -> Result<PipeGeometry, GeometryError> {
    if !arm_a.is_finite() || arm_a <= 0.0 {
        return Err(GeometryError::InvalidSpec(format!(
            "arm_a must be positive, got {arm_a}"
        )));
    }
    if !arm_b.is_finite() || arm_b < 0.0 {
        return Err(GeometryError::InvalidSpec(format!(
            "arm_b must be non-negative, got {arm_b}"
        )));
    }
    match angle {
        BendAngle::Straight => {
            if arm_b != 0.0 {
                return Err(GeometryError::InvalidSpec("a straight pipe has arm_b = 0".to_string()));
            }
            let h = arm_a / 2.0;
            Ok(PipeGeometry {
                angle,
                arm_a,
                arm_b,
                end_a: EndFrame {
                    position: Vec2::new(-h, 0.0),
                    outward: Vec2::new(-1.0, 0.0),
                },
                end_b: EndFrame {
                    position: Vec2::new(h, 0.0),
                    outward: Vec2::new(1.0, 0.0),
                },
            })
        }
        _ => {
            if arm_b == 0.0 {
                return Err(GeometryError::InvalidSpec(
                    "a bent pipe needs a positive arm_b".to_string(),
                ));
            }
            let dir_b = Vec2::from_angle(angle.radians());
            Ok(PipeGeometry {
                angle,
                arm_a,
                arm_b,
                end_a: EndFrame {
                    position: Vec2::new(-arm_a, 0.0),
                    outward: Vec2::new(-1.0, 0.0),
                },
                end_b: EndFrame {
                    position: dir_b * arm_b,
                    outward: dir_b,
                },
            })
        }
    }
}

/// 90 degree elbow used to join perpendicular runs; arms are half the nominal diameter.
pub fn connector_geometry(diameter: Diameter) -> PipeGeometry {
    let arm = 0.5 * f64::from(diameter.inches());
    build(BendAngle::Deg90, arm, arm).expect("connector arms are positive")
}

/// World-frame end of a posed pipe.
pub fn end_frame(geometry: &PipeGeometry, pose: &Pose2, end: PipeEnd) -> EndFrame {
    let local = geometry.local_end(end);
    EndFrame {
        position: pose.apply(local.position),
        outward: pose.rotate(local.outward),
    }
}

/// Pose that puts `moving_end` of `moving` onto `fixed`, facing it.
pub fn connect_transform(fixed: &EndFrame, moving: &PipeGeometry, moving_end: PipeEnd) -> Pose2 {
    let local = moving.local_end(moving_end);
    let theta = (-fixed.outward).angle() - local.outward.angle();
    let t = fixed.position - local.position.rotated(theta);
    Pose2::new(t.x, t.y, theta)
}

/// Position and direction mismatch of two mated ends: (distance, |dot + 1|).
pub fn joint_residual(a: &EndFrame, b: &EndFrame) -> (f64, f64) {
    (a.position.distance(b.position), (a.outward.dot(b.outward) + 1.0).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyMember {
    pub id: u64,
    pub geometry: PipeGeometry,
    pub pose: Pose2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblyJoint {
    pub a: (usize, PipeEnd),
    pub b: (usize, PipeEnd),
}

/// Connected group of posed pipes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assembly {
    pub members: Vec<AssemblyMember>,
    pub joints: Vec<AssemblyJoint>,
}

impl Assembly {
    pub fn new(id: u64, geometry: PipeGeometry, pose: Pose2) -> Self {
        Assembly {
            members: vec![AssemblyMember { id, geometry, pose }],
            joints: Vec::new(),
        }
    }

    fn end_taken(&self, member: usize, end: PipeEnd) -> bool {
        self.joints.iter().any(|j| j.a == (member, end) || j.b == (member, end))
    }

    pub fn end(&self, member: usize, end: PipeEnd) -> Option<EndFrame> {
        let m = self.members.get(member)?;
        Some(end_frame(&m.geometry, &m.pose, end))
    }

    /// Attach a new piece by `moving_end` onto a free end of an existing member.
    pub fn attach(
        &mut self,
        member: usize,
        end: PipeEnd,
        id: u64,
        geometry: PipeGeometry,
        moving_end: PipeEnd,
    ) -> Result<usize, GeometryError> {
        let fixed = self.end(member, end).ok_or(GeometryError::UnknownMember(member))?;
        if self.end_taken(member, end) {
            return Err(GeometryError::EndOccupied { member, end });
        }
        let pose = connect_transform(&fixed, &geometry, moving_end);
        self.members.push(AssemblyMember { id, geometry, pose });
        let idx = self.members.len() - 1;
        self.joints.push(AssemblyJoint {
            a: (member, end),
            b: (idx, moving_end),
        });
        Ok(idx)
    }

    /// Worst (distance, direction) residual over all joints.
    pub fn max_residual(&self) -> (f64, f64) {
        self.joints.iter().fold((0.0, 0.0), |(dp, dd), j| {
            let a = self.end(j.a.0, j.a.1).expect("joint member exists");
            let b = self.end(j.b.0, j.b.1).expect("joint member exists");
            let (p, d) = joint_residual(&a, &b);
            (dp.max(p), dd.max(d))
        })
    }
}
