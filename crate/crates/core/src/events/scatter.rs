use std::f64::consts::TAU;

use crate::geometry::Vec2;
use crate::task::{overlaps, Entity, Note, WorldState};
use crate::types::EntityId;

/// Random draws before falling back to the nearest free spot.
pub const SCATTER_ATTEMPTS: usize = 64;

/// Move every loose part the vehicle overlaps to a seeded free spot within `radius`.
/// Parts on the wall or in hand are never touched.
pub fn collide_and_scatter(world: &mut WorldState, vehicle: EntityId, radius: f64) -> Vec<Note> {
    let Some(Entity::Vehicle(v)) = world.entities.get(&vehicle) else {
        return Vec::new();
    };
    let (name, vpos, vhalf) = (v.name.clone(), v.position(), v.footprint);
    let hit: Vec<EntityId> = world
        .parts()
        .filter(|p| p.status.on_ground() && overlaps(p.ground, p.footprint(), vpos, vhalf))
        .map(|p| p.id)
        .collect();
    let mut notes = Vec::new();
    for id in hit {
        let (from, half) = {
            let p = world.part(id).expect("collected above");
            (p.ground, p.footprint())
        };
        let mut blockers = world.ground_boxes(Some(id));
        blockers.push((vpos, vhalf));
        let free = |c: Vec2| blockers.iter().all(|&(b, h)| !overlaps(c, half, b, h));
        let mut to = None;
        for _ in 0..SCATTER_ATTEMPTS {
            let r = radius * world.meta.rng.unit().sqrt();
            let a = TAU * world.meta.rng.unit();
            let c = from + Vec2::from_angle(a) * r;
            if free(c) {
                to = Some(c);
                break;
            }
        }
        let to = to.unwrap_or_else(|| nearest_free(from, radius, &free));
        world.part_mut(id).expect("collected above").ground = to;
        notes.push(Note::PipeDisplaced {
            part: id,
            vehicle: name.clone(),
            from,
            to,
        });
    }
    notes
}

/// Deterministic spiral outward from `origin` in rings of radius/8.
fn nearest_free(origin: Vec2, radius: f64, free: &impl Fn(Vec2) -> bool) -> Vec2 {
    let step = (radius / 8.0).max(0.1);
    for ring in 1..=200 {
        let r = step * ring as f64;
        let n = 16 * ring;
        for k in 0..n {
            let c = origin + Vec2::from_angle(TAU * k as f64 / n as f64) * r;
            if free(c) {
                return c;
            }
        }
    }
    origin
}

/// Advance all vehicles by `dt` and scatter whatever moving ground vehicles hit.
pub fn step_vehicles(world: &mut WorldState, dt: f64, radius: f64) -> Vec<Note> {
    let ids: Vec<EntityId> = world
        .entities
        .iter()
        .filter(|(_, e)| matches!(e, Entity::Vehicle(v) if v.is_moving()))
        .map(|(id, _)| *id)
        .collect();
    let mut notes = Vec::new();
    for id in ids {
        let ground = match world.entities.get_mut(&id) {
            Some(Entity::Vehicle(v)) => {
                v.step(dt);
                v.ground
            }
            _ => continue,
        };
        if ground {
            notes.extend(collide_and_scatter(world, id, radius));
        }
    }
    notes
}
