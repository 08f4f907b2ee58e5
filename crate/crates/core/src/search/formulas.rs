//! Scalar formulas shared by the tree-search engines.

use crate::model::{NodeId, SearchTree};

/// `max(B_min, min(B_max, floor(alpha * I) + 1))`
pub fn expansion_budget(
    importance: f64,
    budget_alpha: f64,
    budget_min: usize,
    budget_max: usize,
) -> usize {
    let raw = (budget_alpha * importance).floor();
    // Saturating conversion: NaN maps to 0 and huge values to usize::MAX.
    let raw = if raw.is_nan() { 0 } else { raw as usize };
    budget_min.max(budget_max.min(raw.saturating_add(1)))
}

/// `critic + alpha * sqrt(2 ln(parent_visits / visits))`.
///
/// Unvisited nodes score `+inf` so they are tried first; with `alpha = 0`
/// the exploration term vanishes entirely and unvisited nodes score their
/// critic value.
pub fn ucb(critic: f64, parent_visits: u64, visits: u64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return critic;
    }
    if visits == 0 {
        return f64::INFINITY;
    }
    let ratio = parent_visits.max(visits) as f64 / visits as f64;
    critic + alpha * (2.0 * ratio.ln()).sqrt()
}

/// Importance scores `I(n) = max |Critic(d) - Critic(n)|` over descendants
/// `d`, maintained incrementally as nodes are inserted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImportanceRecord {
    values: Vec<f64>,
}

impl ImportanceRecord {
    pub fn get(&self, node: NodeId) -> f64 {
        self.values.get(node).copied().unwrap_or(0.0)
    }

    /// Folds a freshly inserted node into every ancestor's score.
    pub fn update(&mut self, tree: &SearchTree, new_node: NodeId) {
        if self.values.len() < tree.len() {
            self.values.resize(tree.len(), 0.0);
        }
        let score = tree.nodes()[new_node].critic_score;
        for a in tree.ancestors(new_node) {
            let diff = (score - tree.nodes()[a].critic_score).abs();
            if diff > self.values[a] {
                self.values[a] = diff;
            }
        }
    }

    /// Direct evaluation of the definition, for checking the incremental form.
    pub fn from_scratch(tree: &SearchTree, node: NodeId) -> f64 {
        let base = tree.nodes()[node].critic_score;
        let mut best = 0.0f64;
        let mut stack: Vec<NodeId> = tree.children(node).to_vec();
        while let Some(d) = stack.pop() {
            best = best.max((tree.nodes()[d].critic_score - base).abs());
            stack.extend_from_slice(tree.children(d));
        }
        best
    }
}
