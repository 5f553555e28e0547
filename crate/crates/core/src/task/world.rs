use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::jobs::PendingJob;
use super::TaskError;
use crate::config::{BehaviorConfig, Stage, StageKind};
use crate::events::VehicleState;
use crate::geometry::{
    connector_geometry, end_frame, ClampZone, EndFrame, HoldingPoint, PipeEnd, PipeGeometry, Pose2, RawPose, Vec2,
};
use crate::rng::SimRng;
use crate::types::{Diameter, EntityId, Length, PipeColor, PipeKind, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EndRef {
    pub part: EntityId,
    pub end: PipeEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "part", rename_all = "snake_case")]
pub enum PartKind {
    Pipe {
        kind: PipeKind,
        color: PipeColor,
        length: Length,
    },
    Connector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum PartStatus {
    Storage,
    /// With the robot dog for cutting.
    Processing,
    Held {
        by: Role,
    },
    OnWallLoose,
    PartiallyFixed,
    Fixed,
}

impl PartStatus {
    pub fn on_ground(self) -> bool {
        matches!(self, PartStatus::Storage | PartStatus::Processing)
    }

    pub fn on_wall(self) -> bool {
        matches!(
            self,
            PartStatus::OnWallLoose | PartStatus::PartiallyFixed | PartStatus::Fixed
        )
    }
}

/// A pipe or connector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub id: EntityId,
    pub spec: PartKind,
    pub diameter: Diameter,
    pub status: PartStatus,
    /// Ground position while in storage.
    pub ground: Vec2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_pose: Option<Pose2>,
    /// Hand pose while held.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hand: Option<RawPose>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zones: Vec<ClampZone>,
    pub glued: [bool; 2],
    pub joined: [Option<EndRef>; 2],
}

impl Part {
    pub fn new_pipe(id: EntityId, kind: PipeKind, color: PipeColor, diameter: Diameter, length: Length) -> Part {
        Part::new(id, PartKind::Pipe { kind, color, length }, diameter)
    }

    pub fn new_connector(id: EntityId, diameter: Diameter) -> Part {
        Part::new(id, PartKind::Connector, diameter)
    }

    fn new(id: EntityId, spec: PartKind, diameter: Diameter) -> Part {
        Part {
            id,
            spec,
            diameter,
            status: PartStatus::Storage,
            ground: Vec2::ZERO,
            wall_pose: None,
            hand: None,
            zones: Vec::new(),
            glued: [false; 2],
            joined: [None; 2],
        }
    }

    pub fn is_pipe(&self) -> bool {
        matches!(self.spec, PartKind::Pipe { .. })
    }

    pub fn length(&self) -> Option<Length> {
        match self.spec {
            PartKind::Pipe { length, .. } => Some(length),
            PartKind::Connector => None,
        }
    }

    pub fn geometry(&self) -> PipeGeometry {
        match self.spec {
            PartKind::Pipe { length, .. } => PipeGeometry::straight(length.units()).expect("pipe lengths are positive"),
            PartKind::Connector => connector_geometry(self.diameter),
        }
    }

    /// World frame of an end, if the part is on the wall.
    pub fn end_frame(&self, end: PipeEnd) -> Option<EndFrame> {
        self.wall_pose.map(|p| end_frame(&self.geometry(), &p, end))
    }

    /// Axis-aligned half extents while lying on the ground.
    pub fn footprint(&self) -> [f64; 2] {
        match self.spec {
            PartKind::Pipe { length, .. } => [length.units() / 2.0, self.diameter.world_width() / 2.0 + 0.05],
            PartKind::Connector => {
                let arm = 0.5 * self.diameter.inches() as f64;
                [arm, arm]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clamp {
    pub id: EntityId,
    pub diameter: Diameter,
    pub pipe: EntityId,
    pub zone: usize,
    pub at: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub role: Role,
    pub avatar: Vec2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub held: Option<EntityId>,
    pub holding_point: HoldingPoint,
    pub in_lift: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "entity", rename_all = "snake_case")]
pub enum Entity {
    Part(Part),
    Clamp(Clamp),
    Vehicle(VehicleState),
    Participant(Participant),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScissorLift {
    pub u: f64,
    pub height: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupant: Option<Role>,
}

/// World scalars that are not entities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldMeta {
    pub stage: StageKind,
    pub rng: SimRng,
    pub next_id: u64,
    pub glue_charges: u32,
    /// Clamps in stock, indexed by diameter inches minus one.
    pub clamp_stock: [u32; 4],
    pub lift: ScissorLift,
    pub robot_dog_busy_until: u64,
    pub next_job: u64,
    pub pending: Vec<PendingJob>,
    pub events_fired: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub tick: u64,
    pub meta: WorldMeta,
    #[serde(with = "crate::num_keys")]
    pub entities: BTreeMap<EntityId, Entity>,
}

pub(crate) fn overlaps(a: Vec2, ha: [f64; 2], b: Vec2, hb: [f64; 2]) -> bool {
    (a.x - b.x).abs() < ha[0] + hb[0] && (a.y - b.y).abs() < ha[1] + hb[1]
}

/// Seeded free position for a box of half extents `half` with its center in
/// `[lo, hi]`: 64 uniform draws, then a deterministic grid scan, then the center.
pub fn find_free_spot(rng: &mut SimRng, half: [f64; 2], lo: Vec2, hi: Vec2, blockers: &[(Vec2, [f64; 2])]) -> Vec2 {
    let free = |p: Vec2| blockers.iter().all(|&(c, h)| !overlaps(p, half, c, h));
    let (lo, hi) = (
        Vec2::new(lo.x.min(hi.x), lo.y.min(hi.y)),
        Vec2::new(lo.x.max(hi.x), lo.y.max(hi.y)),
    );
    for _ in 0..64 {
        let p = Vec2::new(rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y));
        if free(p) {
            return p;
        }
    }
    let step = 0.25;
    let mut y = lo.y;
    while y <= hi.y {
        let mut x = lo.x;
        while x <= hi.x {
            if free(Vec2::new(x, y)) {
                return Vec2::new(x, y);
            }
            x += step;
        }
        y += step;
    }
    (lo + hi) * 0.5
}

impl WorldState {
    /// Fresh world for one stage.
    pub fn new(stage: &Stage, behaviors: &[BehaviorConfig], seed: u64) -> WorldState {
        let rules = &stage.task.rules;
        let site = &stage.task.site;
        let mut w = WorldState {
            tick: 0,
            meta: WorldMeta {
                stage: stage.kind,
                rng: SimRng::seeded(seed),
                next_id: 1,
                glue_charges: rules.initial_glue,
                clamp_stock: [rules.initial_clamps; 4],
                lift: ScissorLift {
                    u: site.lift_start_u,
                    height: 0.0,
                    occupant: None,
                },
                robot_dog_busy_until: 0,
                next_job: 0,
                pending: Vec::new(),
                events_fired: 0,
            },
            entities: BTreeMap::new(),
        };
        for (role, at) in [
            (Role::Installer, site.installer_start),
            (Role::Fetcher, site.fetcher_start),
        ] {
            let id = w.alloc_id();
            w.entities.insert(
                id,
                Entity::Participant(Participant {
                    role,
                    avatar: at.into(),
                    held: None,
                    holding_point: HoldingPoint::Middle,
                    in_lift: false,
                }),
            );
        }
        for b in behaviors {
            let id = w.alloc_id();
            w.entities.insert(
                id,
                Entity::Vehicle(VehicleState::parked(&b.vehicle, b.start, b.footprint)),
            );
        }
        for item in &stage.task.storage {
            for _ in 0..item.qty {
                let id = w.alloc_id();
                let part = Part::new_pipe(id, item.kind, item.color, item.size, item.length);
                w.spawn_in_storage(part, stage);
            }
        }
        w
    }

    pub fn alloc_id(&mut self) -> EntityId {
        let id = EntityId(self.meta.next_id);
        self.meta.next_id += 1;
        id
    }

    /// Place a part at a free storage position and insert it.
    pub(crate) fn spawn_in_storage(&mut self, mut part: Part, stage_site: &impl StorageArea) {
        let half = part.footprint();
        let (min, max) = stage_site.storage_bounds();
        let lo = Vec2::new(min.x + half[0], min.y + half[1]);
        let hi = Vec2::new(max.x - half[0], max.y - half[1]);
        let blockers = self.ground_boxes(None);
        part.ground = find_free_spot(&mut self.meta.rng, half, lo, hi, &blockers);
        part.status = PartStatus::Storage;
        self.entities.insert(part.id, Entity::Part(part));
    }

    /// Footprints of everything lying on the ground.
    pub fn ground_boxes(&self, except: Option<EntityId>) -> Vec<(Vec2, [f64; 2])> {
        self.parts()
            .filter(|p| p.status.on_ground() && Some(p.id) != except)
            .map(|p| (p.ground, p.footprint()))
            .collect()
    }

    pub fn parts(&self) -> impl Iterator<Item = &Part> {
        self.entities.values().filter_map(|e| match e {
            Entity::Part(p) => Some(p),
            _ => None,
        })
    }

    pub fn vehicles(&self) -> impl Iterator<Item = &VehicleState> {
        self.entities.values().filter_map(|e| match e {
            Entity::Vehicle(v) => Some(v),
            _ => None,
        })
    }

    pub fn part(&self, id: EntityId) -> Result<&Part, TaskError> {
        match self.entities.get(&id) {
            Some(Entity::Part(p)) => Ok(p),
            _ => Err(TaskError::UnknownEntity(id)),
        }
    }

    pub fn part_mut(&mut self, id: EntityId) -> Result<&mut Part, TaskError> {
        match self.entities.get_mut(&id) {
            Some(Entity::Part(p)) => Ok(p),
            _ => Err(TaskError::UnknownEntity(id)),
        }
    }

    pub fn participant(&self, role: Role) -> &Participant {
        self.entities
            .values()
            .find_map(|e| match e {
                Entity::Participant(p) if p.role == role => Some(p),
                _ => None,
            })
            .expect("both participants exist")
    }

    pub fn participant_mut(&mut self, role: Role) -> &mut Participant {
        self.entities
            .values_mut()
            .find_map(|e| match e {
                Entity::Participant(p) if p.role == role => Some(p),
                _ => None,
            })
            .expect("both participants exist")
    }

    pub fn clamp_stock(&self, d: Diameter) -> u32 {
        self.meta.clamp_stock[d.inches() as usize - 1]
    }

    pub(crate) fn clamp_stock_mut(&mut self, d: Diameter) -> &mut u32 {
        &mut self.meta.clamp_stock[d.inches() as usize - 1]
    }

    /// Highest wall height the role can reach right now.
    pub fn reach_top(&self, role: Role, reach_height: f64) -> f64 {
        let lift = &self.meta.lift;
        if lift.occupant == Some(role) {
            reach_height + lift.height
        } else {
            reach_height
        }
    }

    /// Holder of each entity; used by the exclusivity invariant.
    pub fn holders(&self) -> BTreeMap<EntityId, Vec<Role>> {
        let mut out: BTreeMap<EntityId, Vec<Role>> = BTreeMap::new();
        for e in self.entities.values() {
            if let Entity::Participant(p) = e {
                if let Some(h) = p.held {
                    out.entry(h).or_default().push(p.role);
                }
            }
        }
        out
    }
}

/// Anything that knows where the storage area is.
pub(crate) trait StorageArea {
    fn storage_bounds(&self) -> (Vec2, Vec2);
}

impl StorageArea for Stage {
    fn storage_bounds(&self) -> (Vec2, Vec2) {
        self.task.site.storage_bounds()
    }
}

impl StorageArea for crate::config::TaskConfig {
    fn storage_bounds(&self) -> (Vec2, Vec2) {
        self.site.storage_bounds()
    }
}

impl StorageArea for crate::config::SiteConfig {
    fn storage_bounds(&self) -> (Vec2, Vec2) {
        (self.storage_min.into(), self.storage_max.into())
    }
}
