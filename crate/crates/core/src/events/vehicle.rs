use serde::{Deserialize, Serialize};

use crate::config::BehaviorScript;
use crate::geometry::{Pose2, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub name: String,
    /// Ground pose: x, y and heading.
    pub pose: Pose2,
    pub footprint: [f64; 2],
    pub speed: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub path: Vec<Vec2>,
    /// Index of the waypoint being approached.
    pub next: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_script: Option<String>,
    pub overhead_load: bool,
    pub ground: bool,
}

impl VehicleState {
    pub fn parked(name: &str, start: [f64; 3], footprint: [f64; 2]) -> Self {
        VehicleState {
            name: name.to_string(),
            pose: Pose2::new(start[0], start[1], start[2]),
            footprint,
            speed: 0.0,
            path: Vec::new(),
            next: 0,
            active_script: None,
            overhead_load: false,
            ground: true,
        }
    }

    pub fn position(&self) -> Vec2 {
        self.pose.translation()
    }

    /// Begin a script from its first waypoint.
    pub fn start_script(&mut self, script: &BehaviorScript) {
        let Some(&first) = script.path.first() else {
            return;
        };
        self.pose = Pose2::new(first.x, first.y, self.pose.theta);
        self.path = script.path.clone();
        self.next = 1;
        self.speed = script.speed;
        self.active_script = Some(script.id.clone());
        self.overhead_load = script.overhead_load;
        self.ground = script.ground;
        if self.next >= self.path.len() {
            self.finish();
        }
    }

    fn finish(&mut self) {
        self.active_script = None;
        self.path.clear();
        self.next = 0;
        self.overhead_load = false;
    }

    /// Advance along the path by speed * dt, carrying leftover distance past corners.
    pub fn step(&mut self, dt: f64) {
        if self.active_script.is_none() || dt <= 0.0 {
            return;
        }
        let mut remaining = self.speed * dt;
        let mut pos = self.position();
        let mut heading = self.pose.theta;
        while self.next < self.path.len() {
            let target = self.path[self.next];
            let d = pos.distance(target);
            if d > 0.0 {
                heading = (target - pos).angle();
            }
            if d <= remaining {
                remaining -= d;
                pos = target;
                self.next += 1;
            } else {
                pos = pos + (target - pos) * (remaining / d);
                break;
            }
        }
        self.pose = Pose2::new(pos.x, pos.y, heading);
        if self.next >= self.path.len() {
            self.finish();
        }
    }

    pub fn is_moving(&self) -> bool {
        self.active_script.is_some()
    }
}
