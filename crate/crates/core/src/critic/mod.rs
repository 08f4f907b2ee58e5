//! Critics that order search-frontier nodes: policy confidence, a process
//! reward model, and the distance critic.

mod distance;
mod prm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ProofState, Tactic};

pub use distance::{
    compare_distance, decode_distance, distance_value, encode_distance, fit_distance_critic,
    parse_distance_tokens, serialize_distance_tokens, DistanceError, DistancePath, DistanceTable,
    DEFAULT_LEVELS,
};
pub use prm::{
    fit_prm, label_prm_nodes, parse_prm_labels, write_prm_labels, PrmFileError, PrmLabel, PrmTable,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticScore {
    pub value: f64,
    pub orientation: Orientation,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CriticError {
    #[error("tactic `{0}` carries no token log-probabilities")]
    NoTokens(String),
}

/// Token-level average log-probability of a tactic.
pub fn policy_confidence(tactic: &Tactic) -> Result<CriticScore, CriticError> {
    if tactic.token_logprobs.is_empty() {
        return Err(CriticError::NoTokens(tactic.text.clone()));
    }
    Ok(CriticScore {
        value: tactic.mean_logprob(),
        orientation: Orientation::HigherBetter,
    })
}

/// How a node scored: the scalar used by UCB and by scalar best-first
/// ordering, the incoming tactic's policy confidence (tie-breaker), and the
/// distance path when the distance critic is active.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeScore {
    pub value: f64,
    pub confidence: f64,
    pub distance: Option<DistancePath>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Critic {
    #[default]
    PolicyConfidence,
    Prm(PrmTable),
    Distance(DistanceTable),
}

impl Critic {
    pub fn name(&self) -> &'static str {
        match self {
            Critic::PolicyConfidence => "pc",
            Critic::Prm(_) => "prm",
            Critic::Distance(_) => "distance",
        }
    }

    pub fn orientation(&self) -> Orientation {
        match self {
            Critic::Distance(_) => Orientation::LowerBetter,
            _ => Orientation::HigherBetter,
        }
    }

    /// Scores a node reached from its parent by `incoming` (absent for the
    /// root). Policy confidence of the root is 0.
    pub fn score(&self, state: &ProofState, incoming: Option<&Tactic>) -> NodeScore {
        let confidence = incoming.map_or(0.0, Tactic::mean_logprob);
        match self {
            Critic::PolicyConfidence => NodeScore {
                value: confidence,
                confidence,
                distance: None,
            },
            Critic::Prm(table) => NodeScore {
                value: table.predict(state.text()),
                confidence,
                distance: None,
            },
            Critic::Distance(table) => {
                let path = table.estimate(state.text());
                NodeScore {
                    value: distance_value(&path),
                    confidence,
                    distance: Some(path),
                }
            }
        }
    }

    /// The critic's native score for a state.
    pub fn critic_score(&self, state: &ProofState, incoming: Option<&Tactic>) -> CriticScore {
        let node = self.score(state, incoming);
        match &node.distance {
            Some(path) => CriticScore {
                value: decode_distance(path) as f64,
                orientation: Orientation::LowerBetter,
            },
            None => CriticScore {
                value: node.value,
                orientation: Orientation::HigherBetter,
            },
        }
    }
}
