//! Statements, states, tactics, the search tree and proof trajectories.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::escape::{escape_field, unescape_field, UnescapeError};

/// Reserved state text marking proof completion.
pub const QED: &str = "QED";

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("statement `{0}` has an empty goal state")]
    EmptyGoal(String),
    #[error("tactic `{text}` has an invalid token log-probability {value}")]
    InvalidLogprob { text: String, value: f64 },
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("node {0} is not proved")]
    NotProved(NodeId),
    #[error("trajectory for `{0}` is not a completed proof")]
    UnprovedTrajectory(String),
}

/// A proving state. Identity is exact byte equality of the text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProofState(String);

impl ProofState {
    pub fn new(text: impl Into<String>) -> Self {
        ProofState(text.into())
    }

    pub fn qed() -> Self {
        ProofState(QED.to_string())
    }

    pub fn text(&self) -> &str {
        &self.0
    }

    pub fn is_qed(&self) -> bool {
        self.0 == QED
    }
}

impl fmt::Display for ProofState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub id: String,
    pub goal_state: ProofState,
    /// Origin label such as `generated` or `diversity`.
    pub source_tag: String,
}

impl Statement {
    pub fn new(
        id: impl Into<String>,
        goal_state: ProofState,
        source_tag: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let id = id.into();
        if goal_state.text().is_empty() {
            return Err(ModelError::EmptyGoal(id));
        }
        Ok(Statement {
            id,
            goal_state,
            source_tag: source_tag.into(),
        })
    }
}

/// A tactic string with the per-token natural-log probabilities assigned by
/// the policy that proposed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tactic {
    pub text: String,
    pub token_logprobs: Vec<f64>,
}

impl Tactic {
    pub fn new(text: impl Into<String>, token_logprobs: Vec<f64>) -> Result<Self, ModelError> {
        let text = text.into();
        if let Some(&value) = token_logprobs
            .iter()
            .find(|v| !(v.is_finite() && **v <= 0.0))
        {
            return Err(ModelError::InvalidLogprob { text, value });
        }
        Ok(Tactic {
            text,
            token_logprobs,
        })
    }

    /// A tactic without policy scores, e.g. one replayed from a record file.
    pub fn unscored(text: impl Into<String>) -> Self {
        Tactic {
            text: text.into(),
            token_logprobs: Vec::new(),
        }
    }

    /// Mean token log-probability, or 0 when no scores are attached.
    pub fn mean_logprob(&self) -> f64 {
        if self.token_logprobs.is_empty() {
            0.0
        } else {
            self.token_logprobs.iter().sum::<f64>() / self.token_logprobs.len() as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    Open,
    Expanded,
    Proved,
    Dead,
}

impl NodeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeStatus::Open => "open",
            NodeStatus::Expanded => "expanded",
            NodeStatus::Proved => "proved",
            NodeStatus::Dead => "dead",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "open" => Some(NodeStatus::Open),
            "expanded" => Some(NodeStatus::Expanded),
            "proved" => Some(NodeStatus::Proved),
            "dead" => Some(NodeStatus::Dead),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchNode {
    pub node_id: NodeId,
    pub state: ProofState,
    pub parent: Option<NodeId>,
    pub incoming_tactic: Option<Tactic>,
    pub critic_score: f64,
    pub visit_count: u64,
    pub status: NodeStatus,
    pub depth: usize,
}

impl SearchNode {
    /// Policy confidence of the incoming tactic; the root scores 0.
    pub fn confidence(&self) -> f64 {
        self.incoming_tactic
            .as_ref()
            .map_or(0.0, Tactic::mean_logprob)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertResult {
    Inserted(NodeId),
    Duplicate(NodeId),
}

/// The explored graph of one search. Node ids are dense and follow insertion
/// order, so a parent id is always smaller than its child's.
#[derive(Debug, Clone)]
pub struct SearchTree {
    statement: Statement,
    nodes: Vec<SearchNode>,
    children: Vec<Vec<NodeId>>,
    state_index: HashMap<String, NodeId>,
}

impl SearchTree {
    pub fn new(statement: Statement, root_score: f64) -> Self {
        let root = SearchNode {
            node_id: 0,
            state: statement.goal_state.clone(),
            parent: None,
            incoming_tactic: None,
            critic_score: root_score,
            visit_count: 0,
            status: NodeStatus::Open,
            depth: 0,
        };
        let mut state_index = HashMap::new();
        state_index.insert(root.state.text().to_string(), 0);
        SearchTree {
            statement,
            nodes: vec![root],
            children: vec![Vec::new()],
            state_index,
        }
    }

    pub fn statement(&self) -> &Statement {
        &self.statement
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[SearchNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&SearchNode, ModelError> {
        self.nodes.get(id).ok_or(ModelError::UnknownNode(id))
    }

    pub fn node_mut(&mut self, id: NodeId) -> Result<&mut SearchNode, ModelError> {
        self.nodes.get_mut(id).ok_or(ModelError::UnknownNode(id))
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        self.children.get(id).map_or(&[], Vec::as_slice)
    }

    pub fn lookup(&self, state: &ProofState) -> Option<NodeId> {
        self.state_index.get(state.text()).copied()
    }

    pub fn state_index_len(&self) -> usize {
        self.state_index.len()
    }

    /// Inserts `state` under `parent` unless an identical state already
    /// exists anywhere in the tree. A QED state is inserted as `Proved`.
    pub fn insert_node(
        &mut self,
        parent: NodeId,
        tactic: Tactic,
        state: ProofState,
        critic_score: f64,
    ) -> Result<InsertResult, ModelError> {
        let depth = self.node(parent)?.depth + 1;
        if let Some(&existing) = self.state_index.get(state.text()) {
            return Ok(InsertResult::Duplicate(existing));
        }
        let node_id = self.nodes.len();
        let status = if state.is_qed() {
            NodeStatus::Proved
        } else {
            NodeStatus::Open
        };
        self.state_index.insert(state.text().to_string(), node_id);
        self.nodes.push(SearchNode {
            node_id,
            state,
            parent: Some(parent),
            incoming_tactic: Some(tactic),
            critic_score,
            visit_count: 0,
            status,
            depth,
        });
        self.children.push(Vec::new());
        self.children[parent].push(node_id);
        Ok(InsertResult::Inserted(node_id))
    }

    /// Strict ancestors of `id`, nearest first.
    pub fn ancestors(&self, id: NodeId) -> Ancestors<'_> {
        Ancestors {
            tree: self,
            next: self.nodes.get(id).and_then(|n| n.parent),
        }
    }

    /// Root-to-node path of a proved node.
    pub fn extract_trajectory(&self, proved_node: NodeId) -> Result<Trajectory, ModelError> {
        let node = self.node(proved_node)?;
        if node.status != NodeStatus::Proved {
            return Err(ModelError::NotProved(proved_node));
        }
        let mut steps = Vec::with_capacity(node.depth);
        let mut cursor = node;
        while let Some(parent) = cursor.parent {
            let parent_node = &self.nodes[parent];
            let tactic = cursor
                .incoming_tactic
                .clone()
                .expect("non-root node carries its incoming tactic");
            steps.push(TrajectoryStep {
                state: parent_node.state.clone(),
                tactic,
            });
            cursor = parent_node;
        }
        steps.reverse();
        Ok(Trajectory {
            statement: self.statement.clone(),
            steps,
            terminal_state: node.state.clone(),
            proved: true,
        })
    }

    /// One line per node in id order; see [`parse_tree_dump`].
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for node in &self.nodes {
            let parent = node
                .parent
                .map_or_else(|| "-".to_string(), |p| p.to_string());
            let tactic = node
                .incoming_tactic
                .as_ref()
                .map_or(String::new(), |t| escape_field(&t.text));
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                node.node_id,
                parent,
                node.status.as_str(),
                node.critic_score,
                node.visit_count,
                tactic,
                escape_field(node.state.text()),
            ));
        }
        out
    }
}

pub struct Ancestors<'a> {
    tree: &'a SearchTree,
    next: Option<NodeId>,
}

impl Iterator for Ancestors<'_> {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        let current = self.next?;
        self.next = self.tree.nodes[current].parent;
        Some(current)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub state: ProofState,
    pub tactic: Tactic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub statement: Statement,
    pub steps: Vec<TrajectoryStep>,
    pub terminal_state: ProofState,
    pub proved: bool,
}

impl Trajectory {
    pub fn proof_length(&self) -> Result<usize, ModelError> {
        if !self.proved || self.steps.is_empty() {
            return Err(ModelError::UnprovedTrajectory(self.statement.id.clone()));
        }
        Ok(self.steps.len())
    }
}

/// Shortest length among the proved trajectories; unproved ones are ignored.
pub fn shortest_proof_length<'a>(
    trajectories: impl IntoIterator<Item = &'a Trajectory>,
) -> Option<usize> {
    trajectories
        .into_iter()
        .filter_map(|t| t.proof_length().ok())
        .min()
}

// ---------------------------------------------------------------------------
// Tree dump parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct DumpedNode {
    pub node_id: NodeId,
    pub parent: Option<NodeId>,
    pub status: NodeStatus,
    pub critic_score: f64,
    pub visit_count: u64,
    pub tactic_text: Option<String>,
    pub state_text: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DumpError {
    #[error("line {line}: expected 7 tab-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: bad {field}: `{value}`")]
    BadField {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: {source}")]
    Escape { line: usize, source: UnescapeError },
    #[error("line {line}: node id {found} out of sequence (expected {expected})")]
    OutOfOrder {
        line: usize,
        expected: NodeId,
        found: NodeId,
    },
    #[error("line {line}: parent {parent} does not precede node {node}")]
    DanglingParent {
        line: usize,
        node: NodeId,
        parent: NodeId,
    },
    #[error("line {line}: root must have no tactic and every other node must have a parent")]
    RootShape { line: usize },
}

pub fn parse_tree_dump(text: &str) -> Result<Vec<DumpedNode>, DumpError> {
    let mut nodes: Vec<DumpedNode> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 7 {
            return Err(DumpError::FieldCount {
                line,
                found: fields.len(),
            });
        }
        let bad = |field: &'static str, value: &str| DumpError::BadField {
            line,
            field,
            value: value.to_string(),
        };
        let node_id: NodeId = fields[0].parse().map_err(|_| bad("node_id", fields[0]))?;
        if node_id != nodes.len() {
            return Err(DumpError::OutOfOrder {
                line,
                expected: nodes.len(),
                found: node_id,
            });
        }
        let parent = match fields[1] {
            "-" => None,
            p => {
                let parent: NodeId = p.parse().map_err(|_| bad("parent_id", p))?;
                if parent >= node_id {
                    return Err(DumpError::DanglingParent {
                        line,
                        node: node_id,
                        parent,
                    });
                }
                Some(parent)
            }
        };
        if (node_id == 0) != parent.is_none() {
            return Err(DumpError::RootShape { line });
        }
        let status = NodeStatus::parse(fields[2]).ok_or_else(|| bad("status", fields[2]))?;
        let critic_score: f64 = fields[3]
            .parse()
            .map_err(|_| bad("critic_score", fields[3]))?;
        let visit_count: u64 = fields[4]
            .parse()
            .map_err(|_| bad("visit_count", fields[4]))?;
        let unescape =
            |s: &str| unescape_field(s).map_err(|source| DumpError::Escape { line, source });
        let tactic_text = match parent {
            None if !fields[5].is_empty() => return Err(DumpError::RootShape { line }),
            None => None,
            Some(_) => Some(unescape(fields[5])?),
        };
        let state_text = unescape(fields[6])?;
        nodes.push(DumpedNode {
            node_id,
            parent,
            status,
            critic_score,
            visit_count,
            tactic_text,
            state_text,
        });
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn statement(goal: &str) -> Statement {
        Statement::new("s", ProofState::new(goal), "test").unwrap()
    }

    fn tac(text: &str) -> Tactic {
        Tactic::new(text, vec![-0.5]).unwrap()
    }

    #[test]
    fn duplicate_state_is_rejected() {
        let mut tree = SearchTree::new(statement("⊢ P ∧ True"), 0.0);
        let a = tree
            .insert_node(0, tac("constructor"), ProofState::new("⊢ P"), 0.0)
            .unwrap();
        let InsertResult::Inserted(a) = a else {
            panic!("expected insert")
        };
        let first = tree
            .insert_node(0, tac("simp"), ProofState::new("⊢ True"), 0.0)
            .unwrap();
        let second = tree
            .insert_node(a, tac("trivial"), ProofState::new("⊢ True"), 0.0)
            .unwrap();
        let InsertResult::Inserted(first) = first else {
            panic!("expected insert")
        };
        assert_eq!(second, InsertResult::Duplicate(first));
        assert_eq!(tree.len(), 3);
        assert_eq!(tree.children(a), &[] as &[NodeId]);
    }

    #[test]
    fn fresh_insert_under_root() {
        let mut tree = SearchTree::new(statement("⊢ Q"), 0.0);
        let res = tree
            .insert_node(0, tac("intro h"), ProofState::new("h : A\n⊢ Q"), 0.1)
            .unwrap();
        assert_eq!(res, InsertResult::Inserted(1));
        let node = tree.node(1).unwrap();
        assert_eq!(node.parent, Some(0));
        assert_eq!(node.visit_count, 0);
        assert_eq!(node.status, NodeStatus::Open);
    }

    #[test]
    fn whitespace_is_significant() {
        let mut tree = SearchTree::new(statement("⊢ a"), 0.0);
        tree.insert_node(0, tac("x"), ProofState::new("⊢ b"), 0.0)
            .unwrap();
        let res = tree
            .insert_node(0, tac("y"), ProofState::new("⊢  b"), 0.0)
            .unwrap();
        assert_eq!(res, InsertResult::Inserted(2));
    }

    #[test]
    fn unknown_parent_is_an_error() {
        let mut tree = SearchTree::new(statement("⊢ a"), 0.0);
        let err = tree
            .insert_node(5, tac("x"), ProofState::new("⊢ b"), 0.0)
            .unwrap_err();
        assert_eq!(err, ModelError::UnknownNode(5));
    }

    // Fig. 1 left: root with three children, the middle child with two
    // children, and one grandchild with a single child.
    #[test]
    fn seven_node_tree() {
        let mut tree = SearchTree::new(statement("n0"), 0.0);
        let edges = [
            (0, "n1"),
            (0, "n2"),
            (0, "n3"),
            (2, "n4"),
            (2, "n5"),
            (4, "n6"),
        ];
        for (parent, state) in edges {
            let res = tree
                .insert_node(
                    parent,
                    tac(&format!("to {state}")),
                    ProofState::new(state),
                    0.0,
                )
                .unwrap();
            assert!(matches!(res, InsertResult::Inserted(_)));
        }
        assert_eq!(tree.state_index_len(), 7);
        assert_eq!(tree.children(0), &[1, 2, 3]);
        assert_eq!(tree.children(2), &[4, 5]);
        assert_eq!(tree.children(4), &[6]);
        assert_eq!(tree.ancestors(6).collect::<Vec<_>>(), vec![4, 2, 0]);
    }

    #[test]
    fn trajectory_from_depth_three() {
        let mut tree = SearchTree::new(statement("s0"), 0.0);
        tree.insert_node(0, tac("a"), ProofState::new("s1"), 0.0)
            .unwrap();
        tree.insert_node(1, tac("b"), ProofState::new("s2"), 0.0)
            .unwrap();
        tree.insert_node(2, tac("c"), ProofState::qed(), 0.0)
            .unwrap();
        assert_eq!(tree.node(3).unwrap().status, NodeStatus::Proved);
        let traj = tree.extract_trajectory(3).unwrap();
        assert_eq!(traj.proof_length().unwrap(), 3);
        let states: Vec<_> = traj.steps.iter().map(|s| s.state.text()).collect();
        assert_eq!(states, vec!["s0", "s1", "s2"]);
        let tactics: Vec<_> = traj.steps.iter().map(|s| s.tactic.text.as_str()).collect();
        assert_eq!(tactics, vec!["a", "b", "c"]);
        assert!(traj.terminal_state.is_qed());
    }

    #[test]
    fn one_step_proof() {
        let mut tree = SearchTree::new(statement("⊢ P"), 0.0);
        tree.insert_node(0, tac("exact h"), ProofState::qed(), 0.0)
            .unwrap();
        assert_eq!(
            tree.extract_trajectory(1).unwrap().proof_length().unwrap(),
            1
        );
    }

    #[test]
    fn trajectory_of_unproved_node_fails() {
        let mut tree = SearchTree::new(statement("s0"), 0.0);
        tree.insert_node(0, tac("a"), ProofState::new("s1"), 0.0)
            .unwrap();
        assert_eq!(tree.extract_trajectory(1), Err(ModelError::NotProved(1)));
    }

    #[test]
    fn shortest_of_several_proofs() {
        let mk = |n: usize| Trajectory {
            statement: statement("g"),
            steps: (0..n)
                .map(|i| TrajectoryStep {
                    state: ProofState::new(format!("s{i}")),
                    tactic: tac("t"),
                })
                .collect(),
            terminal_state: ProofState::qed(),
            proved: true,
        };
        let proofs = [mk(6), mk(4)];
        assert_eq!(shortest_proof_length(&proofs), Some(4));
        let mut unproved = mk(2);
        unproved.proved = false;
        assert!(unproved.proof_length().is_err());
    }

    #[test]
    fn rejects_positive_logprob() {
        assert!(Tactic::new("simp", vec![-0.1, 0.2]).is_err());
        assert!(Tactic::new("simp", vec![f64::NAN]).is_err());
        assert!(Tactic::new("simp", vec![0.0]).is_ok());
    }

    #[test]
    fn dump_round_trips_through_parser() {
        let mut tree = SearchTree::new(statement("a : ℕ\n⊢ a\t= a"), 0.25);
        tree.insert_node(0, tac("rfl"), ProofState::qed(), -0.5)
            .unwrap();
        tree.insert_node(0, tac("simp\\x"), ProofState::new("⊢ b"), 0.125)
            .unwrap();
        let parsed = parse_tree_dump(&tree.dump()).unwrap();
        assert_eq!(parsed.len(), 3);
        assert_eq!(parsed[0].state_text, "a : ℕ\n⊢ a\t= a");
        assert_eq!(parsed[0].tactic_text, None);
        assert_eq!(parsed[1].status, NodeStatus::Proved);
        assert_eq!(parsed[2].tactic_text.as_deref(), Some("simp\\x"));
        assert_eq!(parsed[2].critic_score, 0.125);
    }

    #[test]
    fn dump_parser_rejects_malformed_lines() {
        assert!(matches!(
            parse_tree_dump("0\t-\topen\t0\t0\t\n"),
            Err(DumpError::FieldCount { line: 1, .. })
        ));
        assert!(matches!(
            parse_tree_dump("0\t-\topen\t0\t0\t\ts\n1\t3\topen\t0\t0\tt\tu\n"),
            Err(DumpError::DanglingParent { line: 2, .. })
        ));
        assert!(matches!(
            parse_tree_dump("0\t-\tweird\t0\t0\t\ts\n"),
            Err(DumpError::BadField {
                field: "status",
                ..
            })
        ));
    }
}
