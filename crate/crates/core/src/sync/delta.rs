use serde::{Deserialize, Serialize};

use crate::task::{Entity, WorldMeta, WorldState};
use crate::types::EntityId;

/// One change to replicated world state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Delta {
    Upsert {
        id: EntityId,
        entity: Entity,
    },
    Remove {
        id: EntityId,
    },
    Meta {
        meta: WorldMeta,
    },
    /// Whole new world, sent when a stage starts.
    Reset {
        world: WorldState,
    },
}

/// Deltas that turn `before` into `after`, apart from the tick counter.
pub fn diff(before: &WorldState, after: &WorldState) -> Vec<Delta> {
    let mut out = Vec::new();
    if before.meta != after.meta {
        out.push(Delta::Meta {
            meta: after.meta.clone(),
        });
    }
    for (id, e) in &after.entities {
        if before.entities.get(id) != Some(e) {
            out.push(Delta::Upsert {
                id: *id,
                entity: e.clone(),
            });
        }
    }
    for id in before.entities.keys() {
        if !after.entities.contains_key(id) {
            out.push(Delta::Remove { id: *id });
        }
    }
    out
}

pub fn apply_deltas(world: &mut WorldState, tick: u64, deltas: &[Delta]) {
    for d in deltas {
        match d {
            Delta::Upsert { id, entity } => {
                world.entities.insert(*id, entity.clone());
            }
            Delta::Remove { id } => {
                world.entities.remove(id);
            }
            Delta::Meta { meta } => world.meta = meta.clone(),
            Delta::Reset { world: w } => *world = w.clone(),
        }
    }
    world.tick = tick;
}
