use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sitesim_core::config::ConfigSet;
use sitesim_core::sync::{replay, DeltaBatch, Phase, ServerEnvelope, ServerMsg, StateHash};
use sitesim_core::task::CompletionReport;
use sitesim_core::types::Role;

use crate::client::ConnStats;
use crate::{BotError, BotScript, LatencyProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dir {
    In,
    Out,
}

/// One wire message as a bot saw it. `t_ms` counts from the start of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireLine {
    pub role: Role,
    pub dir: Dir,
    pub t_ms: u64,
    pub msg: serde_json::Value,
}

impl WireLine {
    pub fn new<T: Serialize>(role: Role, dir: Dir, t_ms: u64, env: &T) -> WireLine {
        WireLine {
            role,
            dir,
            t_ms,
            msg: serde_json::to_value(env).expect("envelope serializes"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub session: String,
    pub config: String,
    pub seed: u64,
    pub tick_rate_hz: u32,
    pub installer: BotScript,
    pub fetcher: BotScript,
    pub latency: LatencyProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptFooter {
    /// Hash carried by the last batch received.
    pub final_hash: Option<StateHash>,
    pub final_batch_seq: u64,
    pub phase: Phase,
    /// Each bot's mirror hash when it stopped.
    pub mirror_hashes: BTreeMap<Role, StateHash>,
    /// Client-side check of the last stage, from the merged segment info.
    pub completion: Option<CompletionReport>,
    pub stats: BTreeMap<Role, ConnStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_code: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "line", rename_all = "snake_case")]
enum Line {
    Header(TranscriptHeader),
    Wire(WireLine),
    Footer(TranscriptFooter),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub wire: Vec<WireLine>,
    pub footer: TranscriptFooter,
}

impl Transcript {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |l: &Line| {
            out.push_str(&serde_json::to_string(l).expect("transcript line serializes"));
            out.push('\n');
        };
        push(&Line::Header(self.header.clone()));
        for w in &self.wire {
            push(&Line::Wire(w.clone()));
        }
        push(&Line::Footer(self.footer.clone()));
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Transcript, BotError> {
        let mut header = None;
        let mut footer = None;
        let mut wire = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let line: Line =
                serde_json::from_str(raw).map_err(|e| BotError::Transcript(format!("line {}: {e}", i + 1)))?;
            match line {
                Line::Header(h) => header = Some(h),
                Line::Wire(w) => wire.push(w),
                Line::Footer(f) => footer = Some(f),
            }
        }
        Ok(Transcript {
            header: header.ok_or_else(|| BotError::Transcript("missing header line".into()))?,
            wire,
            footer: footer.ok_or_else(|| BotError::Transcript("missing footer line".into()))?,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), BotError> {
        std::fs::write(path, self.to_jsonl()).map_err(|e| BotError::Transcript(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Transcript, BotError> {
        let text = std::fs::read_to_string(path).map_err(|e| BotError::Transcript(e.to_string()))?;
        Transcript::from_jsonl(&text)
    }

    /// Server envelopes received by `role`, in arrival order.
    pub fn received(&self, role: Role) -> impl Iterator<Item = ServerEnvelope> + '_ {
        self.wire
            .iter()
            .filter(move |w| w.role == role && w.dir == Dir::In)
            .filter_map(|w| serde_json::from_value(w.msg.clone()).ok())
    }

    /// Every batch either bot received, once each, by seq.
    pub fn batches(&self) -> Vec<DeltaBatch> {
        let mut by_seq = BTreeMap::new();
        for role in Role::ALL {
            for env in self.received(role) {
                if let ServerMsg::DeltaBatch(b) = env.body {
                    by_seq.entry(b.batch_seq).or_insert(b);
                }
            }
        }
        by_seq.into_values().collect()
    }

    /// Feed the recorded intents into a fresh session and return the resulting hash.
    pub fn replay_hash(&self, configs: &ConfigSet) -> Result<StateHash, BotError> {
        let mut bundle = configs.bundle(&self.header.config)?;
        bundle.session.tick_rate_hz = self.header.tick_rate_hz;
        let batches = self.batches();
        let s = replay(Arc::new(bundle), self.header.seed, &batches)?;
        Ok(s.snapshot().hash)
    }

    /// Replay and compare with the recorded final hash.
    pub fn verify(&self, configs: &ConfigSet) -> Result<StateHash, BotError> {
        let got = self.replay_hash(configs)?;
        match self.footer.final_hash {
            Some(expected) if expected != got => Err(BotError::HashMismatch { expected, got }),
            _ => Ok(got),
        }
    }
}
