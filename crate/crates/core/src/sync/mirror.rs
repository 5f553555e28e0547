use thiserror::Error;

use crate::task::WorldState;

use super::delta::apply_deltas;
use super::hash::{snapshot_hash, StateHash};
use super::protocol::{DeltaBatch, Phase, Snapshot};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MirrorError {
    #[error("batch gap: expected {expected}, got {got}")]
    Gap { expected: u64, got: u64 },
    #[error("hash mismatch at batch {batch_seq}: local {local}, server {server}")]
    HashMismatch {
        batch_seq: u64,
        local: StateHash,
        server: StateHash,
    },
}

/// Client-side replica built from a snapshot and the batch stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Mirror {
    pub world: WorldState,
    pub phase: Phase,
    pub batch_seq: u64,
}

impl Mirror {
    pub fn from_snapshot(s: Snapshot) -> Mirror {
        Mirror {
            world: s.world,
            phase: s.phase,
            batch_seq: s.batch_seq,
        }
    }

    /// Replace local state if the snapshot is newer than what we hold.
    pub fn resync(&mut self, s: Snapshot) {
        if s.batch_seq >= self.batch_seq {
            *self = Mirror::from_snapshot(s);
        }
    }

    pub fn hash(&self) -> StateHash {
        snapshot_hash(&self.world)
    }

    /// Apply the next batch. Stale batches are ignored; a gap or divergence leaves state untouched.
    pub fn apply(&mut self, b: &DeltaBatch) -> Result<bool, MirrorError> {
        if b.batch_seq <= self.batch_seq {
            return Ok(false);
        }
        if b.batch_seq != self.batch_seq + 1 {
            return Err(MirrorError::Gap {
                expected: self.batch_seq + 1,
                got: b.batch_seq,
            });
        }
        let mut next = self.world.clone();
        apply_deltas(&mut next, b.tick, &b.deltas);
        let local = snapshot_hash(&next);
        if local != b.hash {
            return Err(MirrorError::HashMismatch {
                batch_seq: b.batch_seq,
                local,
                server: b.hash,
            });
        }
        self.world = next;
        self.phase = b.phase;
        self.batch_seq = b.batch_seq;
        Ok(true)
    }
}
