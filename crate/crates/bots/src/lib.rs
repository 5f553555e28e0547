//! Scripted Installer and Fetcher clients that speak the public wire protocol,
//! plus transcripts, replay and latency injection.

mod board;
mod chat;
mod client;
mod fetcher;
mod installer;
mod latency;
mod pair;
mod transcript;

use serde::{Deserialize, Serialize};
use sitesim_core::config::ConfigError;
use sitesim_core::sync::{Phase, StateHash};
use sitesim_core::types::Role;
use thiserror::Error;

pub use board::{chains, client_task, Board, ChainStep};
pub use chat::ChatLine;
pub use client::{BotConn, ConnOptions, ConnStats};
pub use latency::LatencyProfile;
pub use pair::{run_installer_alone, run_pair, HarnessOptions};
pub use transcript::{Dir, Transcript, TranscriptFooter, TranscriptHeader, WireLine};

#[derive(Debug, Error)]
pub enum BotError {
    #[error("{role} timed out waiting for {waiting_for}")]
    Timeout { role: Role, waiting_for: String },
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("{role}: server refused: {code}: {message}")]
    Refused { role: Role, code: String, message: String },
    #[error("{role}: {kind} rejected with {code}: {message}")]
    Rejected {
        role: Role,
        kind: String,
        code: String,
        message: String,
    },
    #[error("session aborted: {0}")]
    Aborted(String),
    #[error("session already {0:?}")]
    Ended(Phase),
    /// The stage a script was working on completed under it.
    #[error("stage changed")]
    StageChanged,
    #[error("{0} connection closed")]
    Disconnected(Role),
    #[error("websocket: {0}")]
    Ws(String),
    #[error("transcript: {0}")]
    Transcript(String),
    #[error("replay hash {got} differs from recorded {expected}")]
    HashMismatch { expected: StateHash, got: StateHash },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl BotError {
    pub fn code(&self) -> &'static str {
        match self {
            BotError::Timeout { .. } => "TimeoutError",
            BotError::HashMismatch { .. } => "HashMismatchError",
            _ => "ProtocolError",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Prepare one pipe, install it, then prepare the next.
    Canonical,
    /// Prepare every pipe before installing any.
    Batch,
    /// Join and do nothing.
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verbosity {
    Terse,
    /// Also announce each step before doing it.
    Chatty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BotScript {
    pub role: Role,
    pub policy: Policy,
    /// Batches to let pass before each intent.
    pub think_ticks: u64,
    pub verbosity: Verbosity,
}

impl BotScript {
    pub fn new(role: Role, policy: Policy) -> Self {
        BotScript {
            role,
            policy,
            think_ticks: 0,
            verbosity: Verbosity::Terse,
        }
    }
}
