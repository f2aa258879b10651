use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{count_message, BudgetConfig, CompressedForm, CompressionStatus, Message, TokenCounter};

/// Text-to-text summarizer. Errors leave the message pending.
pub trait Summarizer: Send + Sync {
    fn summarize(&self, text: &str) -> Result<String, String>;
}

impl<F: Fn(&str) -> Result<String, String> + Send + Sync> Summarizer for F {
    fn summarize(&self, text: &str) -> Result<String, String> {
        self(text)
    }
}

/// Keeps the first `ratio` of the characters. Stands in for a model when
/// none is configured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadSummarizer {
    pub ratio: f64,
}

impl Default for HeadSummarizer {
    fn default() -> Self {
        HeadSummarizer { ratio: 0.1 }
    }
}

impl Summarizer for HeadSummarizer {
    fn summarize(&self, text: &str) -> Result<String, String> {
        let chars = text.chars().count();
        let keep = (chars as f64 * self.ratio).ceil() as usize;
        Ok(text.chars().take(keep).collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressReport {
    /// Messages whose cache is strictly shorter than the original.
    pub shortened: Vec<u64>,
    /// Messages cached verbatim (short, or the summary was not shorter).
    pub copied: Vec<u64>,
    /// Messages left pending after a summarizer error, with the error.
    pub failed: Vec<(u64, String)>,
}

/// Compress `text` only if it is long enough and the summary is shorter.
fn shrink(text: &str, summarizer: &dyn Summarizer, min_tokens: usize, counter: &dyn TokenCounter) -> Result<String, String> {
    let before = counter.count(text);
    if before < min_tokens {
        return Ok(text.to_string());
    }
    let summary = summarizer.summarize(text)?;
    Ok(if counter.count(&summary) < before { summary } else { text.to_string() })
}

fn compress_one(
    m: &Message,
    summarizer: &dyn Summarizer,
    budget: &BudgetConfig,
    counter: &dyn TokenCounter,
) -> Result<CompressedForm, String> {
    if m.token_count < budget.min_compress_tokens {
        return Ok(CompressedForm { text: m.text.clone(), tool_call_args: m.tool_call_args.clone(), token_count: m.token_count });
    }
    let text = shrink(&m.text, summarizer, budget.min_compress_tokens, counter)?;
    let args = match &m.tool_call_args {
        None => None,
        Some(args) => Some(
            args.iter()
                .map(|(k, v)| Ok((k.clone(), shrink(v, summarizer, budget.min_compress_tokens, counter)?)))
                .collect::<Result<BTreeMap<_, _>, String>>()?,
        ),
    };
    let token_count = count_message(&text, args.as_ref(), counter);
    Ok(CompressedForm { text, tool_call_args: args, token_count })
}

/// Give every pending message a cached compressed form.
///
/// Messages are processed `batch_size` at a time, with one thread per
/// message inside a batch. A message already marked compressed is left alone.
pub fn compress_pending(
    history: &mut [Message],
    summarizer: &dyn Summarizer,
    budget: &BudgetConfig,
    counter: &dyn TokenCounter,
) -> CompressReport {
    let pending: Vec<usize> =
        (0..history.len()).filter(|&i| history[i].compression_status == CompressionStatus::Pending).collect();
    let mut report = CompressReport::default();
    for batch in pending.chunks(budget.batch_size.max(1)) {
        let results: Vec<Result<CompressedForm, String>> = std::thread::scope(|scope| {
            let history = &*history;
            let handles: Vec<_> = batch
                .iter()
                .map(|&i| scope.spawn(move || compress_one(&history[i], summarizer, budget, counter)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err("summarizer panicked".to_string())))
                .collect()
        });
        for (&i, result) in batch.iter().zip(results) {
            let m = &mut history[i];
            match result {
                Ok(form) => {
                    if form.token_count < m.token_count {
                        report.shortened.push(m.id);
                    } else {
                        report.copied.push(m.id);
                    }
                    m.compressed = Some(form);
                    m.compression_status = CompressionStatus::Compressed;
                }
                Err(e) => {
                    log::warn!("message {}: summarizer failed: {e}", m.id);
                    report.failed.push((m.id, e));
                }
            }
        }
    }
    report
}
