//! Best-first search: pop the best active node, expand it once, repeat.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde_json::json;

use super::{Applied, SearchConfig, SearchError, SearchRun, Session, Termination};
use crate::critic::{Critic, DistancePath};
use crate::env::Environment;
use crate::model::{NodeId, NodeStatus, Statement};
use crate::policy::Policy;

#[derive(Debug, Clone, PartialEq)]
enum Primary {
    /// Higher is better.
    Scalar(f64),
    /// Lexicographically smaller is better.
    Distance(DistancePath),
}

/// Heap entry; the greatest entry is selected next. Ties fall back to higher
/// policy confidence, then lower node id.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Priority {
    primary: Primary,
    confidence: f64,
    node: NodeId,
}

impl Priority {
    pub(crate) fn scalar(value: f64, confidence: f64, node: NodeId) -> Self {
        Priority {
            primary: Primary::Scalar(value),
            confidence,
            node,
        }
    }

    pub(crate) fn distance(path: DistancePath, confidence: f64, node: NodeId) -> Self {
        Priority {
            primary: Primary::Distance(path),
            confidence,
            node,
        }
    }
}

impl Eq for Priority {}

impl Ord for Priority {
    fn cmp(&self, other: &Self) -> Ordering {
        let primary = match (&self.primary, &other.primary) {
            (Primary::Scalar(a), Primary::Scalar(b)) => a.total_cmp(b),
            (Primary::Distance(a), Primary::Distance(b)) => b.entries().cmp(a.entries()),
            // One critic per search; mixed keys never meet.
            (Primary::Scalar(_), Primary::Distance(_)) => Ordering::Greater,
            (Primary::Distance(_), Primary::Scalar(_)) => Ordering::Less,
        };
        primary
            .then_with(|| self.confidence.total_cmp(&other.confidence))
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Priority {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn priority_of(critic: &Critic, session: &Session<'_>, node: NodeId) -> Priority {
    let n = &session.tree.nodes()[node];
    let score = critic.score(&n.state, n.incoming_tactic.as_ref());
    match score.distance {
        Some(path) => Priority::distance(path, score.confidence, node),
        None => Priority::scalar(n.critic_score, score.confidence, node),
    }
}

pub fn bfs_search(
    statement: &Statement,
    env: &dyn Environment,
    policy: &dyn Policy,
    critic: &Critic,
    config: &SearchConfig,
) -> Result<SearchRun, SearchError> {
    let mut s = Session::new(statement, env, policy, critic, config)?;
    let mut active = BinaryHeap::new();
    active.push(priority_of(critic, &s, s.tree.root()));

    loop {
        if s.steps >= config.max_steps {
            return s.finish(Termination::StepBudget, None);
        }
        if s.timed_out() {
            return s.finish(Termination::Timeout, None);
        }
        let Some(best) = active.pop() else {
            return s.finish(Termination::Exhausted, None);
        };
        let node = best.node;
        s.steps += 1;
        {
            let n = s.tree.node_mut(node)?;
            n.status = NodeStatus::Expanded;
            n.visit_count += 1;
        }
        let n = &s.tree.nodes()[node];
        s.events.push(
            s.steps,
            super::EventKind::Select,
            node,
            json!({ "critic_score": n.critic_score, "confidence": n.confidence() }),
        );

        let tactics = s.sample(node)?;
        s.events.push(
            s.steps,
            super::EventKind::Expand,
            node,
            json!({ "tactics": tactics.iter().map(|t| t.text.as_str()).collect::<Vec<_>>() }),
        );
        for tactic in tactics {
            if s.timed_out() {
                return s.finish(Termination::Timeout, None);
            }
            match s.apply(node, tactic)? {
                Applied::Proved(id) => return s.finish(Termination::Proved, Some(id)),
                Applied::Inserted(id) => active.push(priority_of(critic, &s, id)),
                Applied::Duplicate | Applied::Rejected => {}
            }
        }
    }
}
