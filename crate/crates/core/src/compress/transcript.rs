use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{count_message, CompressionStatus, Message, MessageGroup, Selection, SelectionStatus, TokenCounter};

pub const SIDECAR_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {detail}")]
    Parse { path: PathBuf, line: usize, detail: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> TranscriptError + '_ {
    move |source| TranscriptError::Io { path: path.to_path_buf(), source }
}

/// Read a JSONL transcript. Records without an `id` get their line index.
/// Token counts are recomputed with `counter`, and a cached form that is not
/// marked compressed or is longer than its original is discarded.
pub fn read_transcript(path: &Path, counter: &dyn TokenCounter) -> Result<Vec<Message>, TranscriptError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse = |detail: String| TranscriptError::Parse { path: path.to_path_buf(), line: n + 1, detail };
        let mut value: serde_json::Value = serde_json::from_str(&line).map_err(|e| parse(e.to_string()))?;
        if let Some(obj) = value.as_object_mut() {
            obj.entry("id").or_insert_with(|| serde_json::Value::from(out.len() as u64));
        }
        let mut m: Message = serde_json::from_value(value).map_err(|e| parse(e.to_string()))?;
        m.recount(counter);
        if let Some(c) = &mut m.compressed {
            c.token_count = count_message(&c.text, c.tool_call_args.as_ref(), counter);
        }
        let cache_ok = m.compressed.as_ref().is_some_and(|c| c.token_count <= m.token_count);
        if !cache_ok || m.compression_status == CompressionStatus::Pending {
            m.compressed = None;
            m.compression_status = CompressionStatus::Pending;
        }
        out.push(m);
    }
    Ok(out)
}

pub fn write_transcript(path: &Path, history: &[Message]) -> Result<(), TranscriptError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for m in history {
        serde_json::to_writer(&mut w, m).map_err(|e| io_err(path)(e.into()))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupStatus {
    pub index: usize,
    pub member_ids: Vec<u64>,
    pub status: SelectionStatus,
}

/// Audit record of one selection, written next to the transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusSidecar {
    pub schema_version: u32,
    pub target_tokens: usize,
    pub total_tokens: usize,
    pub over_budget: bool,
    pub window_dropped: usize,
    pub groups: Vec<GroupStatus>,
}

impl StatusSidecar {
    pub fn new(history: &[Message], groups: &[MessageGroup], selection: &Selection, target_tokens: usize) -> Self {
        StatusSidecar {
            schema_version: SIDECAR_SCHEMA_VERSION,
            target_tokens,
            total_tokens: selection.total_tokens,
            over_budget: selection.over_budget,
            window_dropped: selection.window_dropped,
            groups: groups
                .iter()
                .zip(&selection.statuses)
                .map(|(g, &status)| GroupStatus {
                    index: g.index,
                    member_ids: g.members.iter().map(|&i| history[i].id).collect(),
                    status,
                })
                .collect(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), TranscriptError> {
        let mut json = serde_json::to_string_pretty(self).expect("sidecar serializes");
        json.push('\n');
        std::fs::write(path, json).map_err(io_err(path))
    }

    pub fn read(path: &Path) -> Result<Self, TranscriptError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| TranscriptError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            detail: e.to_string(),
        })
    }
}
