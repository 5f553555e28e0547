use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::world::{Part, PartKind, PartStatus, WorldState};
use crate::config::{LayoutSlot, Orientation, SegmentSpec, TargetLayout, TaskConfig};
use crate::geometry::angle_distance;
use crate::types::{EntityId, Length};

const ORIENTATION_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mismatch {
    Color,
    Type,
    Size,
    Length,
    Orientation,
    NotFixed,
    Adjacency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "slot", rename_all = "snake_case")]
pub enum SlotMatch {
    Unmatched,
    Matched { part: EntityId },
    Mismatch { part: EntityId, fields: Vec<Mismatch> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionReport {
    pub complete: bool,
    pub matched: usize,
    pub total: usize,
    #[serde(with = "crate::num_keys")]
    pub slots: BTreeMap<u32, SlotMatch>,
}

fn orientation_of(theta: f64) -> Option<Orientation> {
    if angle_distance(theta, 0.0) < ORIENTATION_EPS || angle_distance(theta, PI) < ORIENTATION_EPS {
        Some(Orientation::Horizontal)
    } else if angle_distance(theta, FRAC_PI_2) < ORIENTATION_EPS || angle_distance(theta, -FRAC_PI_2) < ORIENTATION_EPS
    {
        Some(Orientation::Vertical)
    } else {
        None
    }
}

/// Attribute predicates for one pipe against one slot; adjacency is not considered.
pub fn slot_mismatches(seg: &SegmentSpec, slot: &LayoutSlot, part: &Part, length_tol: f64) -> Vec<Mismatch> {
    let PartKind::Pipe { kind, color, length } = part.spec else {
        return vec![Mismatch::Type];
    };
    let mut out = Vec::new();
    if color != seg.color {
        out.push(Mismatch::Color);
    }
    if kind != seg.kind {
        out.push(Mismatch::Type);
    }
    if part.diameter != seg.size {
        out.push(Mismatch::Size);
    }
    let tol = Length::from_units(length_tol).unwrap_or(Length::ZERO);
    let diff = if length > seg.length {
        length.checked_sub(seg.length)
    } else {
        seg.length.checked_sub(length)
    };
    if diff.is_none_or(|d| d > tol) {
        out.push(Mismatch::Length);
    }
    if part.wall_pose.and_then(|p| orientation_of(p.theta)) != Some(slot.orientation) {
        out.push(Mismatch::Orientation);
    }
    if part.status != PartStatus::Fixed {
        out.push(Mismatch::NotFixed);
    }
    out
}

/// Pipes joined through a single connector, as unordered pairs.
fn connector_links(world: &WorldState) -> BTreeSet<(EntityId, EntityId)> {
    world
        .parts()
        .filter(|c| !c.is_pipe() && c.status == PartStatus::Fixed)
        .filter_map(|c| match c.joined {
            [Some(a), Some(b)] => Some((a.part.min(b.part), a.part.max(b.part))),
            _ => None,
        })
        .collect()
}

struct Search<'a> {
    slots: Vec<u32>,
    candidates: Vec<Vec<EntityId>>,
    edges: &'a [(u32, u32)],
    links: &'a BTreeSet<(EntityId, EntityId)>,
}

impl Search<'_> {
    fn linked(&self, a: EntityId, b: EntityId) -> bool {
        self.links.contains(&(a.min(b), a.max(b)))
    }

    fn run(&self, i: usize, assigned: &mut BTreeMap<u32, EntityId>) -> bool {
        if i == self.slots.len() {
            return true;
        }
        let slot = self.slots[i];
        for &pid in &self.candidates[i] {
            if assigned.values().any(|&p| p == pid) {
                continue;
            }
            let adjacency_ok = self.edges.iter().all(|&(a, b)| {
                let other = if a == slot {
                    b
                } else if b == slot {
                    a
                } else {
                    return true;
                };
                assigned.get(&other).is_none_or(|&q| self.linked(pid, q))
            });
            if !adjacency_ok {
                continue;
            }
            assigned.insert(slot, pid);
            if self.run(i + 1, assigned) {
                return true;
            }
            assigned.remove(&slot);
        }
        false
    }
}

/// Exact graph match of fixed pipes onto layout slots, with a greedy per-slot
/// diagnostic when no exact match exists.
pub fn check_completion(world: &WorldState, layout: &TargetLayout, task: &TaskConfig) -> CompletionReport {
    let tol = task.rules.length_tol;
    let links = connector_links(world);
    let edges = layout.edges();
    let wall_pipes: Vec<&Part> = world.parts().filter(|p| p.is_pipe() && p.status.on_wall()).collect();
    let pairs: Vec<(&LayoutSlot, &SegmentSpec)> = layout
        .slots
        .iter()
        .filter_map(|s| task.segment(s.index).map(|seg| (s, seg)))
        .collect();

    let search = Search {
        slots: pairs.iter().map(|(s, _)| s.index).collect(),
        candidates: pairs
            .iter()
            .map(|(slot, seg)| {
                wall_pipes
                    .iter()
                    .filter(|p| slot_mismatches(seg, slot, p, tol).is_empty())
                    .map(|p| p.id)
                    .collect()
            })
            .collect(),
        edges: &edges,
        links: &links,
    };
    let mut assigned = BTreeMap::new();
    let total = layout.slots.len();
    if pairs.len() == total && search.run(0, &mut assigned) {
        let slots = assigned
            .into_iter()
            .map(|(s, part)| (s, SlotMatch::Matched { part }))
            .collect();
        return CompletionReport {
            complete: true,
            matched: total,
            total,
            slots,
        };
    }

    let mut slots = BTreeMap::new();
    let mut used: BTreeMap<u32, EntityId> = BTreeMap::new();
    for (slot, seg) in &pairs {
        let best = wall_pipes
            .iter()
            .filter(|p| !used.values().any(|&u| u == p.id))
            .map(|p| {
                let mut m = slot_mismatches(seg, slot, p, tol);
                let adjacent_ok = layout
                    .neighbors(slot.index)
                    .iter()
                    .all(|n| used.get(n).is_none_or(|&q| links.contains(&(p.id.min(q), p.id.max(q)))));
                if !adjacent_ok {
                    m.push(Mismatch::Adjacency);
                }
                (m.len(), p.id, m)
            })
            .min_by_key(|(n, id, _)| (*n, *id));
        let entry = match best {
            None => SlotMatch::Unmatched,
            Some((_, part, fields)) => {
                used.insert(slot.index, part);
                if fields.is_empty() {
                    SlotMatch::Matched { part }
                } else {
                    SlotMatch::Mismatch { part, fields }
                }
            }
        };
        slots.insert(slot.index, entry);
    }
    for s in &layout.slots {
        slots.entry(s.index).or_insert(SlotMatch::Unmatched);
    }
    let matched = slots
        .values()
        .filter(|m| matches!(m, SlotMatch::Matched { .. }))
        .count();
    CompletionReport {
        complete: false,
        matched,
        total,
        slots,
    }
}
