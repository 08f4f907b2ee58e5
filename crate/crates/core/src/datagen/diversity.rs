//! New statements minted from the frontier of unfinished searches.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::model::{NodeStatus, SearchTree, Statement};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiversityConfig {
    /// Frontier nodes taken from each unproved tree; 0 disables the rule.
    pub per_tree: usize,
}

/// For each unproved tree, takes the deepest `Open` nodes (ties by lower id)
/// and turns their states into statements tagged `diversity`. A state shared
/// by several trees is emitted once.
pub fn synthesize_diversity_statements(
    trees: &[SearchTree],
    rules: &DiversityConfig,
) -> Vec<Statement> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for tree in trees {
        let proved = tree.nodes().iter().any(|n| n.status == NodeStatus::Proved);
        if proved || rules.per_tree == 0 {
            continue;
        }
        let mut frontier: Vec<_> = tree
            .nodes()
            .iter()
            .filter(|n| n.status == NodeStatus::Open && n.parent.is_some())
            .collect();
        frontier.sort_by(|a, b| b.depth.cmp(&a.depth).then(a.node_id.cmp(&b.node_id)));
        for node in frontier.into_iter().take(rules.per_tree) {
            if !seen.insert(node.state.text().to_string()) {
                continue;
            }
            let id = format!("{}#n{}", tree.statement().id, node.node_id);
            out.push(
                Statement::new(id, node.state.clone(), "diversity")
                    .expect("tree states are non-empty"),
            );
        }
    }
    out
}
