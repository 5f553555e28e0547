use serde::{Deserialize, Serialize};

use crate::config::{MenuItem, StageKind, TargetLayout, TaskRules};
use crate::task::{FilteredView, Intent, Note, Signal, WorldState};
use crate::types::Role;

use super::delta::Delta;
use super::hash::StateHash;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Lobby,
    Training,
    Main,
    Complete,
    Aborted,
}

impl Phase {
    pub fn for_stage(kind: StageKind) -> Phase {
        match kind {
            StageKind::Training => Phase::Training,
            StageKind::Main => Phase::Main,
        }
    }

    pub fn is_running(self) -> bool {
        matches!(self, Phase::Training | Phase::Main)
    }

    pub fn is_over(self) -> bool {
        matches!(self, Phase::Complete | Phase::Aborted)
    }
}

/// Every wire message: `{"v":1,"session":..,"seq":..,"tick":..,"body":{"type":..}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<B> {
    pub v: u32,
    pub session: String,
    /// Strictly increasing per direction per connection.
    pub seq: u64,
    pub tick: u64,
    pub body: B,
}

impl<B> Envelope<B> {
    pub fn new(session: impl Into<String>, seq: u64, tick: u64, body: B) -> Self {
        Envelope {
            v: PROTOCOL_VERSION,
            session: session.into(),
            seq,
            tick,
            body,
        }
    }
}

pub type ClientEnvelope = Envelope<ClientMsg>;
pub type ServerEnvelope = Envelope<ServerMsg>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMsg {
    /// `token` resumes a disconnected seat. `config` and `seed` pick the session config
    /// and seed when this hello creates the session; the server defaults apply otherwise.
    Hello {
        role: Role,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        token: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        config: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Intent {
        client_ref: u64,
        intent: Intent,
    },
    /// Shorthand for a chat intent.
    Chat {
        client_ref: u64,
        text: String,
    },
    ResyncRequest,
    Ping {
        nonce: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum ServerMsg {
    Welcome(Welcome),
    Briefing(Briefing),
    DeltaBatch(DeltaBatch),
    Snapshot(Snapshot),
    Paused { waiting_for: Role, timeout_s: u64 },
    Resumed,
    Aborted { reason: String },
    Pong { nonce: u64 },
    Error { code: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Welcome {
    pub role: Role,
    pub resume_token: String,
    pub snapshot: Snapshot,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub briefing: Option<Briefing>,
}

/// Static, role-filtered stage information. Sent when a stage starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Briefing {
    pub phase: Phase,
    pub stage: StageKind,
    pub task: String,
    pub tick_rate_hz: u32,
    pub view: FilteredView,
    pub layout: TargetLayout,
    pub menu: Vec<MenuItem>,
    pub rules: TaskRules,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub phase: Phase,
    /// Seq of the last batch folded into `world`.
    pub batch_seq: u64,
    pub world: WorldState,
    pub hash: StateHash,
}

/// Result of one queued intent, in application order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentOutcome {
    pub role: Role,
    pub client_ref: u64,
    pub intent: Intent,
    /// `ok` or an error code.
    pub result: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl IntentOutcome {
    pub fn is_ok(&self) -> bool {
        self.result == crate::metrics::OUTCOME_OK
    }
}

/// Everything that changed in one tick. Identical for both clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaBatch {
    /// Gapless, starting at 1.
    pub batch_seq: u64,
    pub tick: u64,
    pub phase: Phase,
    pub deltas: Vec<Delta>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outcomes: Vec<IntentOutcome>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<Note>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub signals: Vec<Signal>,
    /// Hash of the authoritative world after this batch.
    pub hash: StateHash,
}
