//! Compress a long agent transcript to a token budget and show which
//! rendering level each message group ended up at.

use seedevo::compress::{
    compress_pending, group_costs, group_messages, reconstruct_context, select_statuses, BudgetConfig,
    HeadSummarizer, Message, Role, WordPunctCounter,
};

fn filler(words: usize, tag: &str) -> String {
    (0..words).map(|i| format!("{tag}{i}")).collect::<Vec<_>>().join(" ")
}

fn main() {
    let mut history = vec![Message::new(0, Role::System, "You are an autonomous data scientist.")];
    let mut id = 1;
    for step in 0..20 {
        history.push(Message::tool_call(id, format!("step {step}: run training"), [("script", filler(120, "arg"))]));
        history.push(Message::new(id + 1, Role::Tool, filler(400, "log")));
        history.push(Message::new(id + 2, Role::Ai, format!("validation auc after step {step} looks stable")));
        id += 3;
    }

    let budget = BudgetConfig { target_tokens: 3000, trigger_tokens: 10_000, window_groups: 30, ..BudgetConfig::default() };
    let counter = WordPunctCounter;
    let report = compress_pending(&mut history, &HeadSummarizer::default(), &budget, &counter);
    println!("cached: {} shortened, {} copied verbatim", report.shortened.len(), report.copied.len());

    let (groups, _) = group_messages(&history);
    let costs = group_costs(&history, &groups, &budget, &counter);
    let selection = select_statuses(&costs, &budget);
    let line: String = selection
        .statuses
        .iter()
        .map(|s| match s {
            seedevo::compress::SelectionStatus::Original => 'O',
            seedevo::compress::SelectionStatus::Compressed => 'c',
            seedevo::compress::SelectionStatus::Truncate => 't',
            seedevo::compress::SelectionStatus::Drop => '.',
        })
        .collect();
    println!("groups (oldest first): {line}");

    let original: usize = history.iter().map(|m| m.token_count).sum();
    let rendered = reconstruct_context(&history, &groups, &selection.statuses, &budget, &counter);
    let total: usize = rendered.iter().map(|r| r.token_count).sum();
    println!(
        "{original} tokens -> {total} (target {}, over budget: {}, window dropped {})",
        budget.target_tokens, selection.over_budget, selection.window_dropped
    );
    println!("first rendered: {:?}", rendered[0].text);
}
