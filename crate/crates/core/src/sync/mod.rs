//! Session state machine, wire protocol types and client-side replication.

mod delta;
mod hash;
mod mirror;
mod protocol;
mod session;

pub use delta::{apply_deltas, diff, Delta};
pub use hash::{canonical_json, hash_value, snapshot_hash, StateHash, FLOAT_QUANTUM};
pub use mirror::{Mirror, MirrorError};
pub use protocol::{
    Briefing, ClientEnvelope, ClientMsg, DeltaBatch, Envelope, IntentOutcome, Phase, ServerEnvelope, ServerMsg,
    Snapshot, Welcome, PROTOCOL_VERSION,
};
pub use session::{replay, stage_label, Recipient, Session, SessionError, PAUSE_TIMEOUT_S};
