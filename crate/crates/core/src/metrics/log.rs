use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::config::Condition;
use crate::types::Role;

/// Outcome string for an accepted intent; rejected intents carry their error code.
pub const OUTCOME_OK: &str = "ok";

pub type Outcome = String;

/// One intent as applied by the server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionLogLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
    pub tick: u64,
    pub role: Role,
    pub kind: String,
    pub payload: serde_json::Value,
    pub outcome: Outcome,
}

/// One fired timeline event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLogLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
    pub tick: u64,
    pub vehicle: String,
    pub condition: Condition,
    pub event_id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// How a session ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeLogLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
    pub tick: u64,
    pub session_outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Any line of a session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LogRecord {
    Action(ActionLogLine),
    Event(EventLogLine),
    Outcome(OutcomeLogLine),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LogSummary {
    /// Sum over stages of the last tick seen in each.
    pub duration_ticks: u64,
    pub intents_per_role: BTreeMap<Role, u64>,
    pub chat_counts: BTreeMap<Role, u64>,
    pub events_fired: u64,
    pub errors_by_kind: BTreeMap<String, u64>,
}

impl LogSummary {
    pub fn errors(&self, kind: &str) -> u64 {
        self.errors_by_kind.get(kind).copied().unwrap_or(0)
    }
}

/// Aggregate a JSONL stream of action and event lines. Blank lines are skipped.
pub fn summarize_log(text: &str) -> Result<LogSummary, MetricsError> {
    let mut s = LogSummary::default();
    let mut last_tick: BTreeMap<Option<String>, u64> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: LogRecord = serde_json::from_str(line).map_err(|e| MetricsError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let (stage, tick) = match record {
            LogRecord::Action(a) => {
                *s.intents_per_role.entry(a.role).or_default() += 1;
                if a.outcome == OUTCOME_OK {
                    if a.kind == "chat" {
                        *s.chat_counts.entry(a.role).or_default() += 1;
                    }
                } else {
                    *s.errors_by_kind.entry(a.outcome).or_default() += 1;
                }
                (a.stage, a.tick)
            }
            LogRecord::Event(e) => {
                s.events_fired += 1;
                (e.stage, e.tick)
            }
            LogRecord::Outcome(o) => (o.stage, o.tick),
        };
        let t = last_tick.entry(stage).or_default();
        *t = (*t).max(tick);
    }
    s.duration_ticks = last_tick.values().sum();
    Ok(s)
}
