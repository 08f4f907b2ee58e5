//! eta-MCTS without simulation: UCB descent, importance-scaled expansion
//! budgets, and visit-count back-propagation.
//!
//! A node may be expanded repeatedly until it has executed `E(n)` tactics in
//! total, where `E(n)` grows with the node's importance score. A node whose
//! budget is spent (or whose policy has nothing new to offer) and whose
//! children are all dead is itself marked dead and skipped by selection.

use std::collections::HashSet;

use serde_json::json;

use super::{
    expansion_budget, ucb, Applied, EventKind, ImportanceRecord, SearchConfig, SearchError,
    SearchRun, Session, Termination,
};
use crate::critic::Critic;
use crate::env::Environment;
use crate::model::{NodeId, NodeStatus, Statement};
use crate::policy::Policy;

#[derive(Default)]
struct Bookkeeping {
    importance: ImportanceRecord,
    executed: Vec<usize>,
    tried: Vec<HashSet<String>>,
    saturated: Vec<bool>,
}

impl Bookkeeping {
    fn grow(&mut self, len: usize) {
        self.executed.resize(len, 0);
        self.tried.resize_with(len, HashSet::new);
        self.saturated.resize(len, false);
    }

    fn budget(&self, node: NodeId, config: &SearchConfig) -> usize {
        expansion_budget(
            self.importance.get(node),
            config.budget_alpha,
            config.budget_min,
            config.budget_max,
        )
    }

    fn has_budget(&self, node: NodeId, config: &SearchConfig) -> bool {
        !self.saturated[node] && self.executed[node] < self.budget(node, config)
    }
}

/// Walks from the root to the first node with unspent budget, following the
/// child with the highest UCB. Dead ends are marked `Dead` and the walk is
/// restarted; `None` means the whole tree is dead.
fn select_path(s: &mut Session<'_>, book: &Bookkeeping) -> Option<Vec<NodeId>> {
    let config = s.config;
    loop {
        if s.tree.nodes()[s.tree.root()].status == NodeStatus::Dead {
            return None;
        }
        let mut path = vec![s.tree.root()];
        let mut node = s.tree.root();
        loop {
            if book.has_budget(node, config) {
                return Some(path);
            }
            let parent_visits = s.tree.nodes()[node].visit_count;
            let mut best: Option<(NodeId, f64)> = None;
            for &child in s.tree.children(node) {
                let c = &s.tree.nodes()[child];
                if c.status == NodeStatus::Dead {
                    continue;
                }
                let value = ucb(
                    c.critic_score,
                    parent_visits,
                    c.visit_count,
                    config.ucb_alpha,
                );
                if best.is_none_or(|(_, b)| value > b) {
                    best = Some((child, value));
                }
            }
            match best {
                Some((child, _)) => {
                    path.push(child);
                    node = child;
                }
                None => {
                    if let Ok(n) = s.tree.node_mut(node) {
                        n.status = NodeStatus::Dead;
                    }
                    break;
                }
            }
        }
    }
}

pub fn eta_mcts_search(
    statement: &Statement,
    env: &dyn Environment,
    policy: &dyn Policy,
    critic: &Critic,
    config: &SearchConfig,
) -> Result<SearchRun, SearchError> {
    let mut s = Session::new(statement, env, policy, critic, config)?;
    let mut book = Bookkeeping::default();
    book.grow(1);

    loop {
        if s.steps >= config.max_steps {
            return s.finish(Termination::StepBudget, None);
        }
        if s.timed_out() {
            return s.finish(Termination::Timeout, None);
        }
        let Some(path) = select_path(&mut s, &book) else {
            return s.finish(Termination::Exhausted, None);
        };
        s.steps += 1;
        for &n in &path {
            s.tree.node_mut(n)?.visit_count += 1;
        }
        let node = *path.last().expect("paths start at the root");
        s.tree.node_mut(node)?.status = NodeStatus::Expanded;
        let budget = book.budget(node, config);
        s.events.push(
            s.steps,
            EventKind::Select,
            node,
            json!({
                "path": path,
                "critic_score": s.tree.nodes()[node].critic_score,
                "importance": book.importance.get(node),
                "budget": budget,
            }),
        );

        let mut tactics = s.sample(node)?;
        tactics.retain(|t| !book.tried[node].contains(&t.text));
        // Most confident first; the sort is stable so sample order breaks ties.
        tactics.sort_by(|a, b| b.mean_logprob().total_cmp(&a.mean_logprob()));
        tactics.truncate(budget.saturating_sub(book.executed[node]));
        if tactics.is_empty() {
            book.saturated[node] = true;
        }
        s.events.push(
            s.steps,
            EventKind::Expand,
            node,
            json!({ "tactics": tactics.iter().map(|t| t.text.as_str()).collect::<Vec<_>>() }),
        );
        for tactic in tactics {
            if s.timed_out() {
                return s.finish(Termination::Timeout, None);
            }
            book.tried[node].insert(tactic.text.clone());
            book.executed[node] += 1;
            match s.apply(node, tactic)? {
                Applied::Proved(id) => return s.finish(Termination::Proved, Some(id)),
                Applied::Inserted(id) => {
                    book.grow(s.tree.len());
                    book.importance.update(&s.tree, id);
                }
                Applied::Duplicate | Applied::Rejected => {}
            }
        }
    }
}
