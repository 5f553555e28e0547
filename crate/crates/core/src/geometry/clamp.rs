use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::pipe::{PipeEnd, PipeGeometry};
use super::vec::{normalize_angle, Pose2, Vec2};
use super::{GeometryError, Haptic};
use crate::types::Diameter;

/// Fractions of the length (from end A) where a free pipe needs clamps.
pub const ZONE_FRACTIONS: [f64; 2] = [0.1, 0.9];

/// Wall region where a clamp must go to fix a pipe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampZone {
    pub center: Vec2,
    /// Distance from end A along the pipe axis.
    pub axial_offset: f64,
    /// Zone orientation, perpendicular to the pipe axis.
    pub angle: f64,
    pub length: f64,
    pub diameter: Diameter,
    pub clamped: bool,
}

/// A straight pipe lying on the wall, as seen by zone computation.
#[derive(Debug, Clone, Copy)]
pub struct WallPipe<'a> {
    pub geometry: &'a PipeGeometry,
    pub pose: Pose2,
    pub diameter: Diameter,
    pub on_wall: bool,
    /// End that is joined to an already fixed assembly, if any.
    pub joined: Option<PipeEnd>,
}

pub fn clamp_zones(pipe: &WallPipe<'_>) -> Result<Vec<ClampZone>, GeometryError> {
    if !pipe.on_wall {
        return Err(GeometryError::NotOnWall);
    }
    if !pipe.geometry.is_straight() {
        return Err(GeometryError::NotStraight);
    }
    let len = pipe.geometry.length();
    let fractions: &[f64] = match pipe.joined {
        None => &ZONE_FRACTIONS,
        Some(PipeEnd::A) => &ZONE_FRACTIONS[1..],
        Some(PipeEnd::B) => &ZONE_FRACTIONS[..1],
    };
    Ok(fractions
        .iter()
        .map(|f| {
            let offset = f * len;
            ClampZone {
                center: pipe.pose.apply(Vec2::new(offset - len / 2.0, 0.0)),
                axial_offset: offset,
                angle: normalize_angle(pipe.pose.theta + FRAC_PI_2),
                length: pipe.diameter.world_width(),
                diameter: pipe.diameter,
                clamped: false,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampFit {
    pub fit: bool,
    pub signal: Option<Haptic>,
}

pub fn clamp_fit(clamp_diameter: Diameter, zone: &ClampZone, clamp_at: Vec2, tol: f64) -> ClampFit {
    let fit = clamp_diameter == zone.diameter && clamp_at.distance(zone.center) <= tol;
    ClampFit {
        fit,
        signal: fit.then_some(Haptic::Short),
    }
}
