use std::fmt::Write as _;
use std::path::Path;

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    /// RFC 3339 UTC timestamp.
    pub timestamp: String,
    pub pass: String,
    pub round: usize,
    pub backend: String,
    pub prompt: String,
    pub raw_request: Option<String>,
    pub response: String,
    /// What the orchestrator did with the reply, e.g. `accepted`.
    pub outcome: String,
}

/// Append-only log of advisor exchanges.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn push(&mut self, mut entry: TranscriptEntry) {
        if entry.timestamp.is_empty() {
            entry.timestamp = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
        }
        self.entries.push(entry);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(
                out,
                "=== {} pass={} round={} backend={} outcome={}",
                e.timestamp, e.pass, e.round, e.backend, e.outcome
            );
            out.push_str("--- prompt\n");
            out.push_str(&e.prompt);
            if !e.prompt.ends_with('\n') {
                out.push('\n');
            }
            if let Some(raw) = &e.raw_request {
                out.push_str("--- request\n");
                out.push_str(raw);
                out.push('\n');
            }
            out.push_str("--- response\n");
            out.push_str(&e.response);
            if !e.response.ends_with('\n') {
                out.push('\n');
            }
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}
