//! Long-horizon history compression.
//!
//! Two stages: [`compress_pending`] caches a shorter form of every message
//! once, and [`select_statuses`] picks a rendering level per message group so
//! the reconstructed context fits a token budget.

mod select;
mod summarize;
mod tokens;
mod transcript;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use select::{group_costs, select_statuses, GroupCosts, Selection};
pub use summarize::{compress_pending, CompressReport, HeadSummarizer, Summarizer};
pub use tokens::{head_within, TokenCounter, WordPunctCounter};
pub use transcript::{read_transcript, write_transcript, GroupStatus, StatusSidecar, TranscriptError};

/// Appended to truncated text.
pub const ELISION_MARKER: &str = " …";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    Ai,
    Tool,
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionStatus {
    Original,
    Compressed,
    Truncate,
    Drop,
}

impl SelectionStatus {
    pub const STAGES: [SelectionStatus; 4] = [Self::Original, Self::Compressed, Self::Truncate, Self::Drop];
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum CompressionStatus {
    #[default]
    Pending,
    Compressed,
}

impl From<CompressionStatus> for u8 {
    fn from(s: CompressionStatus) -> u8 {
        s as u8
    }
}

impl TryFrom<u8> for CompressionStatus {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            0 => Ok(Self::Pending),
            1 => Ok(Self::Compressed),
            _ => Err(format!("compression status must be 0 or 1, got {v}")),
        }
    }
}

/// Cached shorter rendering of a message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressedForm {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_args: Option<BTreeMap<String, String>>,
    pub token_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub id: u64,
    pub role: Role,
    pub text: String,
    /// Present on ai messages that issue tool calls.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_args: Option<BTreeMap<String, String>>,
    #[serde(default)]
    pub token_count: usize,
    #[serde(default)]
    pub compression_status: CompressionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compressed: Option<CompressedForm>,
}

/// Tokens in `text` plus every argument key and value.
pub fn count_message(text: &str, args: Option<&BTreeMap<String, String>>, counter: &dyn TokenCounter) -> usize {
    let args: usize = args.into_iter().flatten().map(|(k, v)| counter.count(k) + counter.count(v)).sum();
    counter.count(text) + args
}

impl Message {
    pub fn new(id: u64, role: Role, text: impl Into<String>) -> Self {
        let mut m = Message {
            id,
            role,
            text: text.into(),
            tool_call_args: None,
            token_count: 0,
            compression_status: CompressionStatus::Pending,
            compressed: None,
        };
        m.recount(&WordPunctCounter);
        m
    }

    /// An ai message issuing tool calls with the given arguments.
    pub fn tool_call<K, V>(id: u64, text: impl Into<String>, args: impl IntoIterator<Item = (K, V)>) -> Self
    where
        K: Into<String>,
        V: Into<String>,
    {
        let mut m = Message::new(id, Role::Ai, text);
        m.tool_call_args = Some(args.into_iter().map(|(k, v)| (k.into(), v.into())).collect());
        m.recount(&WordPunctCounter);
        m
    }

    pub fn is_tool_call(&self) -> bool {
        self.role == Role::Ai && self.tool_call_args.is_some()
    }

    /// Refresh the cached token count with `counter`.
    pub fn recount(&mut self, counter: &dyn TokenCounter) {
        self.token_count = count_message(&self.text, self.tool_call_args.as_ref(), counter);
    }

    /// Tokens of the cached form, if one exists and is marked compressed.
    pub fn compressed_tokens(&self) -> Option<usize> {
        match (&self.compressed, self.compression_status) {
            (Some(c), CompressionStatus::Compressed) => Some(c.token_count),
            _ => None,
        }
    }

    /// Head of the text within `cap` tokens plus the elision marker. Arguments are elided.
    pub fn truncated_text(&self, cap: usize, counter: &dyn TokenCounter) -> String {
        format!("{}{ELISION_MARKER}", head_within(&self.text, cap, counter).trim_end())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageGroup {
    pub index: usize,
    /// Positions in the history, contiguous and ordered.
    pub members: Vec<usize>,
}

/// Partition `history` into groups: each tool-call message with the tool
/// responses that follow it, everything else alone. Tool responses without a
/// preceding tool call become singletons and are reported.
pub fn group_messages(history: &[Message]) -> (Vec<MessageGroup>, Vec<String>) {
    let mut groups: Vec<MessageGroup> = Vec::new();
    let mut diagnostics = Vec::new();
    let mut open = false;
    for (i, m) in history.iter().enumerate() {
        if m.role == Role::Tool && open {
            groups.last_mut().expect("open group").members.push(i);
            continue;
        }
        if m.role == Role::Tool {
            diagnostics.push(format!("message {} is a tool response without a preceding tool call", m.id));
        }
        open = m.is_tool_call();
        groups.push(MessageGroup { index: groups.len(), members: vec![i] });
    }
    (groups, diagnostics)
}

/// Compression schedule and budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BudgetConfig {
    pub trigger_tokens: usize,
    pub target_tokens: usize,
    pub recent_groups_protected: usize,
    pub window_groups: usize,
    pub min_compress_tokens: usize,
    pub periodic_interval_steps: usize,
    pub batch_size: usize,
    /// Token cap for the head kept by a truncated message.
    pub truncate_tokens: usize,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig {
            trigger_tokens: 100_000,
            target_tokens: 20_000,
            recent_groups_protected: 5,
            window_groups: 50,
            min_compress_tokens: 50,
            periodic_interval_steps: 100,
            batch_size: 2,
            truncate_tokens: 64,
        }
    }
}

impl BudgetConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.target_tokens >= self.trigger_tokens {
            return Err(format!(
                "target_tokens ({}) must be below trigger_tokens ({})",
                self.target_tokens, self.trigger_tokens
            ));
        }
        if self.recent_groups_protected > self.window_groups {
            return Err(format!(
                "recent_groups_protected ({}) exceeds window_groups ({})",
                self.recent_groups_protected, self.window_groups
            ));
        }
        if self.window_groups == 0 {
            return Err("window_groups must be at least 1".into());
        }
        if self.batch_size == 0 {
            return Err("batch_size must be at least 1".into());
        }
        Ok(())
    }
}

/// Whether a compression pass is due.
pub fn maybe_trigger(active_tokens: usize, steps_since_last: usize, budget: &BudgetConfig) -> bool {
    active_tokens > budget.trigger_tokens || steps_since_last >= budget.periodic_interval_steps
}

/// One message of the working context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rendered {
    pub id: u64,
    pub role: Role,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_args: Option<BTreeMap<String, String>>,
    pub token_count: usize,
    pub status: SelectionStatus,
}

/// Render the working context in history order. Dropped groups are omitted.
pub fn reconstruct_context(
    history: &[Message],
    groups: &[MessageGroup],
    statuses: &[SelectionStatus],
    budget: &BudgetConfig,
    counter: &dyn TokenCounter,
) -> Vec<Rendered> {
    assert_eq!(groups.len(), statuses.len(), "one status per group");
    let mut out = Vec::new();
    for (group, &status) in groups.iter().zip(statuses) {
        for &i in &group.members {
            let m = &history[i];
            let (text, args, token_count) = match status {
                SelectionStatus::Drop => continue,
                SelectionStatus::Original => (m.text.clone(), m.tool_call_args.clone(), m.token_count),
                SelectionStatus::Compressed => match (&m.compressed, m.compression_status) {
                    (Some(c), CompressionStatus::Compressed) => (c.text.clone(), c.tool_call_args.clone(), c.token_count),
                    _ => (m.text.clone(), m.tool_call_args.clone(), m.token_count),
                },
                SelectionStatus::Truncate => {
                    let text = m.truncated_text(budget.truncate_tokens, counter);
                    let n = counter.count(&text);
                    (text, None, n)
                }
            };
            out.push(Rendered { id: m.id, role: m.role, text, tool_call_args: args, token_count, status });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn history() -> Vec<Message> {
        vec![
            Message::new(0, Role::System, "You are a careful engineer."),
            Message::tool_call(1, "run two things", [("cmd", "ls"), ("path", "/tmp")]),
            Message::new(2, Role::Tool, "a b c"),
            Message::new(3, Role::Tool, "d e"),
            Message::new(4, Role::Ai, "done"),
        ]
    }

    #[test]
    fn groups_fuse_tool_calls_with_responses() {
        let (groups, diags) = group_messages(&history()[1..]);
        let members: Vec<_> = groups.iter().map(|g| g.members.clone()).collect();
        assert_eq!(members, vec![vec![0, 1, 2], vec![3]]);
        assert!(diags.is_empty());
    }

    #[test]
    fn text_only_history_is_all_singletons() {
        let h: Vec<_> = (0..4).map(|i| Message::new(i, if i % 2 == 0 { Role::Human } else { Role::Ai }, "hi")).collect();
        let (groups, _) = group_messages(&h);
        assert_eq!(groups.len(), 4);
        assert!(group_messages(&[]).0.is_empty());
    }

    #[test]
    fn orphan_tool_message_is_reported() {
        let h = vec![Message::new(0, Role::Human, "hi"), Message::new(1, Role::Tool, "stray")];
        let (groups, diags) = group_messages(&h);
        assert_eq!(groups.len(), 2);
        assert_eq!(diags.len(), 1);
    }

    #[test]
    fn token_count_includes_args() {
        let m = Message::tool_call(1, "run", [("cmd", "ls -la")]);
        // run | cmd | ls - la
        assert_eq!(m.token_count, 5);
    }

    #[test]
    fn trigger_rule() {
        let b = BudgetConfig::default();
        assert!(maybe_trigger(100_001, 0, &b));
        assert!(maybe_trigger(50_000, 100, &b));
        assert!(!maybe_trigger(99_999, 99, &b));
        assert!(!maybe_trigger(100_000, 0, &b));
    }

    #[test]
    fn all_original_renders_identically() {
        let h = history();
        let (groups, _) = group_messages(&h);
        let statuses = vec![SelectionStatus::Original; groups.len()];
        let out = reconstruct_context(&h, &groups, &statuses, &BudgetConfig::default(), &WordPunctCounter);
        let texts: Vec<_> = out.iter().map(|r| r.text.as_str()).collect();
        let orig: Vec<_> = h.iter().map(|m| m.text.as_str()).collect();
        assert_eq!(texts, orig);
    }

    #[test]
    fn compression_status_serializes_as_integer() {
        assert_eq!(serde_json::to_string(&CompressionStatus::Compressed).unwrap(), "1");
        assert!(serde_json::from_str::<CompressionStatus>("2").is_err());
    }

    #[test]
    fn budget_validation() {
        assert!(BudgetConfig::default().validate().is_ok());
        let bad = BudgetConfig { target_tokens: 200_000, ..BudgetConfig::default() };
        assert!(bad.validate().is_err());
        let bad = BudgetConfig { recent_groups_protected: 60, ..BudgetConfig::default() };
        assert!(bad.validate().is_err());
    }
}
