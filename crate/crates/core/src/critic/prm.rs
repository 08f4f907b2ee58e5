//! Process reward model: ±1 reachability labels and a tabular MSE fit.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::escape::{escape_field, unescape_field};
use crate::model::{NodeStatus, SearchTree};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrmLabel {
    pub statement_id: String,
    pub state_text: String,
    /// +1 when the node reaches a proof within its tree, otherwise -1.
    pub label: i8,
}

/// Labels every node of a finished search tree. A node is positive iff it or
/// one of its descendants is `Proved`.
pub fn label_prm_nodes(tree: &SearchTree) -> Vec<PrmLabel> {
    let nodes = tree.nodes();
    let mut reaches = vec![false; nodes.len()];
    // Children always have larger ids than their parents.
    for node in nodes.iter().rev() {
        if node.status == NodeStatus::Proved {
            reaches[node.node_id] = true;
        }
        if reaches[node.node_id] {
            if let Some(parent) = node.parent {
                reaches[parent] = true;
            }
        }
    }
    nodes
        .iter()
        .map(|node| PrmLabel {
            statement_id: tree.statement().id.clone(),
            state_text: node.state.text().to_string(),
            label: if reaches[node.node_id] { 1 } else { -1 },
        })
        .collect()
}

/// `state -> (sum of labels, count)`; predictions are per-state means, which
/// minimize the squared error of a tabular model exactly.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PrmTable {
    entries: HashMap<String, (f64, u64)>,
}

impl PrmTable {
    pub fn predict(&self, state: &str) -> f64 {
        match self.entries.get(state) {
            Some(&(sum, count)) if count > 0 => sum / count as f64,
            _ => 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn fit_prm(labels: &[PrmLabel]) -> PrmTable {
    let mut entries: HashMap<String, (f64, u64)> = HashMap::new();
    for l in labels {
        let slot = entries.entry(l.state_text.clone()).or_insert((0.0, 0));
        slot.0 += f64::from(l.label);
        slot.1 += 1;
    }
    PrmTable { entries }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("PRM label file line {line}: {message}")]
pub struct PrmFileError {
    pub line: usize,
    pub message: String,
}

/// TSV rows `statement_id<TAB>state_text<TAB>label`.
pub fn write_prm_labels(labels: &[PrmLabel]) -> String {
    labels
        .iter()
        .map(|l| {
            format!(
                "{}\t{}\t{}\n",
                escape_field(&l.statement_id),
                escape_field(&l.state_text),
                if l.label > 0 { "+1" } else { "-1" }
            )
        })
        .collect()
}

pub fn parse_prm_labels(text: &str) -> Result<Vec<PrmLabel>, PrmFileError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.is_empty() {
            continue;
        }
        let err = |message: String| PrmFileError { line, message };
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        }
        let label = match fields[2] {
            "+1" | "1" => 1,
            "-1" => -1,
            other => return Err(err(format!("label must be +1 or -1, got `{other}`"))),
        };
        out.push(PrmLabel {
            statement_id: unescape_field(fields[0]).map_err(|e| err(e.to_string()))?,
            state_text: unescape_field(fields[1]).map_err(|e| err(e.to_string()))?,
            label,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ProofState, Statement, Tactic};

    fn tree() -> SearchTree {
        let st = Statement::new("s", ProofState::new("root"), "t").unwrap();
        let mut tree = SearchTree::new(st, 0.0);
        let t = || Tactic::unscored("t");
        tree.insert_node(0, t(), ProofState::new("a"), 0.0).unwrap(); // 1
        tree.insert_node(0, t(), ProofState::new("b"), 0.0).unwrap(); // 2
        tree.insert_node(1, t(), ProofState::new("a1"), 0.0)
            .unwrap(); // 3
        tree.insert_node(2, t(), ProofState::new("b1"), 0.0)
            .unwrap(); // 4
        tree.insert_node(3, t(), ProofState::qed(), 0.0).unwrap(); // 5
        tree
    }

    #[test]
    fn proved_branch_is_positive() {
        let labels = label_prm_nodes(&tree());
        let by_state: HashMap<_, _> = labels
            .iter()
            .map(|l| (l.state_text.as_str(), l.label))
            .collect();
        assert_eq!(by_state["root"], 1);
        assert_eq!(by_state["a"], 1);
        assert_eq!(by_state["a1"], 1);
        assert_eq!(by_state["QED"], 1);
        assert_eq!(by_state["b"], -1);
        assert_eq!(by_state["b1"], -1);
    }

    #[test]
    fn means_per_state() {
        let l = |s: &str, v: i8| PrmLabel {
            statement_id: "x".into(),
            state_text: s.into(),
            label: v,
        };
        let table = fit_prm(&[l("p", 1), l("p", 1), l("q", 1), l("q", -1)]);
        assert_eq!(table.predict("p"), 1.0);
        assert_eq!(table.predict("q"), 0.0);
        assert_eq!(table.predict("unseen"), 0.0);
    }

    #[test]
    fn label_file_round_trip() {
        let labels = label_prm_nodes(&tree());
        let text = write_prm_labels(&labels);
        assert_eq!(parse_prm_labels(&text).unwrap(), labels);
        assert!(parse_prm_labels("a\tb\t0\n").is_err());
        assert!(parse_prm_labels("a\tb\n").is_err());
    }
}
