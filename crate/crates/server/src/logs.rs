use std::fs::{File, OpenOptions};
use std::io::{LineWriter, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sitesim_core::sync::{ClientEnvelope, ServerEnvelope};
use sitesim_core::types::Role;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WireDir {
    In,
    Out,
}

/// One line of the wire log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireLogLine {
    pub conn: u64,
    pub dir: WireDir,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
    pub msg: serde_json::Value,
}

/// Append-only JSONL file shared between tasks.
#[derive(Debug, Clone)]
pub(crate) struct JsonlSink(Arc<Mutex<LineWriter<File>>>);

impl JsonlSink {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        let f = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(JsonlSink(Arc::new(Mutex::new(LineWriter::new(f)))))
    }

    pub fn write<T: Serialize>(&self, line: &T) {
        let Ok(text) = serde_json::to_string(line) else { return };
        let mut w = self.0.lock().expect("log lock");
        if let Err(e) = writeln!(w, "{text}") {
            tracing::warn!("log write failed: {e}");
        }
    }
}

pub(crate) fn wire_in(sink: &Option<JsonlSink>, conn: u64, role: Option<Role>, env: &ClientEnvelope) {
    if let Some(s) = sink {
        s.write(&WireLogLine {
            conn,
            dir: WireDir::In,
            role,
            msg: serde_json::to_value(env).unwrap_or_default(),
        });
    }
}

pub(crate) fn wire_out(sink: &Option<JsonlSink>, conn: u64, role: Option<Role>, env: &ServerEnvelope) {
    if let Some(s) = sink {
        s.write(&WireLogLine {
            conn,
            dir: WireDir::Out,
            role,
            msg: serde_json::to_value(env).unwrap_or_default(),
        });
    }
}
