use serde::{Deserialize, Serialize};

use super::{BudgetConfig, Message, MessageGroup, SelectionStatus, TokenCounter};

/// Token cost of one group at each rendering level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCosts {
    pub original: usize,
    /// `None` while any member is still pending compression.
    pub compressed: Option<usize>,
    pub truncate: usize,
}

impl GroupCosts {
    pub fn at(&self, status: SelectionStatus) -> usize {
        match status {
            SelectionStatus::Original => self.original,
            SelectionStatus::Compressed => self.compressed.unwrap_or(self.original),
            SelectionStatus::Truncate => self.truncate,
            SelectionStatus::Drop => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub statuses: Vec<SelectionStatus>,
    pub total_tokens: usize,
    /// Set when even the most degraded admissible selection misses the target.
    pub over_budget: bool,
    /// Groups dropped by the sliding window alone.
    pub window_dropped: usize,
}

pub fn group_costs(
    history: &[Message],
    groups: &[MessageGroup],
    budget: &BudgetConfig,
    counter: &dyn TokenCounter,
) -> Vec<GroupCosts> {
    groups
        .iter()
        .map(|g| {
            let members = g.members.iter().map(|&i| &history[i]);
            GroupCosts {
                original: members.clone().map(|m| m.token_count).sum(),
                compressed: members.clone().map(Message::compressed_tokens).sum(),
                truncate: members.map(|m| counter.count(&m.truncated_text(budget.truncate_tokens, counter))).sum(),
            }
        })
        .collect()
}

/// Choose a rendering level for every group.
///
/// Groups outside the window (all but the first group and the newest
/// `window_groups - 1`) are dropped. The newest `recent_groups_protected`
/// groups stay original. The rest are degraded oldest-first, one full pass
/// per stage (compressed, then truncate, then drop), checking the budget
/// before each step. A step is taken only if it strictly lowers the group's
/// cost, and the first group is never dropped.
pub fn select_statuses(costs: &[GroupCosts], budget: &BudgetConfig) -> Selection {
    let n = costs.len();
    let mut statuses = vec![SelectionStatus::Original; n];
    let protected_from = n.saturating_sub(budget.recent_groups_protected);
    let window_from = n.saturating_sub(budget.window_groups.saturating_sub(1)).max(1).min(protected_from);
    for s in statuses.iter_mut().take(window_from).skip(1) {
        *s = SelectionStatus::Drop;
    }
    let window_dropped = window_from.saturating_sub(1);

    let mut total: usize = costs.iter().zip(&statuses).map(|(c, &s)| c.at(s)).sum();
    'stages: for stage in [SelectionStatus::Compressed, SelectionStatus::Truncate, SelectionStatus::Drop] {
        for i in 0..protected_from {
            if total <= budget.target_tokens {
                break 'stages;
            }
            if statuses[i] >= stage || (i == 0 && stage == SelectionStatus::Drop) {
                continue;
            }
            let (now, next) = (costs[i].at(statuses[i]), costs[i].at(stage));
            if next < now {
                statuses[i] = stage;
                total = total - now + next;
            }
        }
    }
    Selection { statuses, total_tokens: total, over_budget: total > budget.target_tokens, window_dropped }
}
