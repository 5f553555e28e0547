use serde::{Deserialize, Serialize};

use super::intent::{ConnectorRequest, CutRequest, OrderItem};
use super::world::{Part, PartKind, PartStatus, WorldState};
use super::Note;
use crate::config::TaskConfig;
use crate::types::Length;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "job", rename_all = "snake_case")]
pub enum Job {
    Drone {
        items: Vec<OrderItem>,
    },
    RobotDog {
        cuts: Vec<CutRequest>,
        connectors: Vec<ConnectorRequest>,
    },
}

/// A machine job waiting for its due tick. Ties run in scheduling order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingJob {
    pub seq: u64,
    pub due: u64,
    pub job: Job,
}

pub(crate) fn schedule(w: &mut WorldState, due: u64, job: Job) {
    let seq = w.meta.next_job;
    w.meta.next_job += 1;
    w.meta.pending.push(PendingJob { seq, due, job });
}

/// Run every job due at or before the current tick, ordered by (due, seq).
pub fn process_due_jobs(w: &mut WorldState, task: &TaskConfig) -> Vec<Note> {
    let tick = w.tick;
    let (mut due, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut w.meta.pending)
        .into_iter()
        .partition(|j| j.due <= tick);
    w.meta.pending = rest;
    due.sort_by_key(|j| (j.due, j.seq));
    let mut notes = Vec::new();
    for job in due {
        match job.job {
            Job::Drone { items } => {
                let mut parts = Vec::new();
                for it in items {
                    for _ in 0..it.qty {
                        let id = w.alloc_id();
                        w.spawn_in_storage(Part::new_pipe(id, it.kind, it.color, it.diameter, it.length), task);
                        parts.push(id);
                    }
                }
                notes.push(Note::Delivered { parts });
            }
            Job::RobotDog { cuts, connectors } => {
                for c in cuts {
                    if let Some(note) = cut(w, task, c) {
                        notes.push(note);
                    }
                }
                let mut parts = Vec::new();
                for c in connectors {
                    for _ in 0..c.qty {
                        let id = w.alloc_id();
                        w.spawn_in_storage(Part::new_connector(id, c.diameter), task);
                        parts.push(id);
                    }
                }
                if !parts.is_empty() {
                    notes.push(Note::Delivered { parts });
                }
            }
        }
    }
    notes
}

/// The cut piece keeps the original id; the remainder becomes a new pipe or scrap.
fn cut(w: &mut WorldState, task: &TaskConfig, c: CutRequest) -> Option<Note> {
    let Ok(part) = w.part_mut(c.pipe) else {
        return None;
    };
    if part.status != PartStatus::Processing {
        return None;
    }
    let PartKind::Pipe { kind, color, length } = part.spec else {
        return None;
    };
    let rest = length.checked_sub(c.length)?;
    part.spec = PartKind::Pipe {
        kind,
        color,
        length: c.length,
    };
    part.status = PartStatus::Storage;
    let diameter = part.diameter;
    let min_piece = Length::from_units(task.rules.min_piece).unwrap_or(Length::ZERO);
    let (remainder, scrap) = if rest == Length::ZERO {
        (None, None)
    } else if rest >= min_piece {
        let id = w.alloc_id();
        w.spawn_in_storage(Part::new_pipe(id, kind, color, diameter, rest), task);
        (Some(id), None)
    } else {
        (None, Some(rest))
    };
    Some(Note::Cut {
        part: c.pipe,
        remainder,
        scrap,
    })
}
