//! Tactic proposal: temperature-batched sampling plans, a tabular softmax
//! policy for synthetic environments, and a client for external policy
//! servers.

mod tabular;
mod wire;

use std::collections::HashSet;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ProofState, Statement, Tactic};

pub use tabular::{fit_tabular_policy, TabularSoftmaxPolicy};
pub use wire::{
    external_policy_call, parse_wire_request, parse_wire_response, Endpoint, ExternalPolicy,
    PolicyWireRequest, PolicyWireResponse, WireTactic,
};

/// Random stream handed to a policy; one per search.
pub type SearchRng = ChaCha8Rng;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("invalid sampling plan: {0}")]
    InvalidPlan(String),
    #[error("invalid policy parameter: {0}")]
    InvalidParameter(String),
    #[error("policy server timed out after {0:.3}s")]
    Timeout(f64),
    #[error("malformed policy response: {0}")]
    Malformed(String),
    #[error("policy connection failed: {0}")]
    Connection(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureGroup {
    pub temperature: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingPlan {
    pub total_k: usize,
    pub temperature_groups: Vec<TemperatureGroup>,
}

impl Default for SamplingPlan {
    /// Eight samples, two at each of 0.7, 0.8, 1.0 and 1.1.
    fn default() -> Self {
        let groups = [0.7, 0.8, 1.0, 1.1]
            .into_iter()
            .map(|temperature| TemperatureGroup {
                temperature,
                count: 2,
            })
            .collect();
        SamplingPlan {
            total_k: 8,
            temperature_groups: groups,
        }
    }
}

impl SamplingPlan {
    pub fn single(temperature: f64, k: usize) -> Self {
        SamplingPlan {
            total_k: k,
            temperature_groups: vec![TemperatureGroup {
                temperature,
                count: k,
            }],
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.total_k == 0 {
            return Err(PolicyError::InvalidPlan("total_k must be positive".into()));
        }
        for g in &self.temperature_groups {
            if !(g.temperature.is_finite() && g.temperature > 0.0) || g.count == 0 {
                return Err(PolicyError::InvalidPlan(format!(
                    "group ({}, {}) needs a positive temperature and count",
                    g.temperature, g.count
                )));
            }
        }
        let sum: usize = self.temperature_groups.iter().map(|g| g.count).sum();
        if sum != self.total_k {
            return Err(PolicyError::InvalidPlan(format!(
                "group counts sum to {sum}, expected {}",
                self.total_k
            )));
        }
        Ok(())
    }

    /// One temperature per sample, in group order.
    pub fn temperatures(&self) -> Vec<f64> {
        self.temperature_groups
            .iter()
            .flat_map(|g| std::iter::repeat_n(g.temperature, g.count))
            .collect()
    }
}

/// A tactic proposer. Implementations are read-only during search; all
/// randomness comes from the caller's stream.
pub trait Policy: Send + Sync {
    /// Returns at most `plan.total_k` tactics with distinct texts.
    /// `candidates` is the environment's vocabulary for `state`, possibly
    /// empty for open-ended engines.
    fn sample_tactics(
        &self,
        statement: &Statement,
        state: &ProofState,
        candidates: &[String],
        plan: &SamplingPlan,
        rng: &mut SearchRng,
    ) -> Result<Vec<Tactic>, PolicyError>;
}

/// Keeps the first occurrence of each tactic text.
pub fn dedup_tactics(tactics: Vec<Tactic>) -> Vec<Tactic> {
    let mut seen = HashSet::new();
    tactics
        .into_iter()
        .filter(|t| seen.insert(t.text.clone()))
        .collect()
}

/// Splits `logprob` evenly across the whitespace tokens of `text`.
pub(crate) fn spread_over_tokens(text: &str, logprob: f64) -> Vec<f64> {
    let n = text.split_whitespace().count().max(1);
    vec![(logprob / n as f64).min(0.0); n]
}

/// Proposes every candidate once, in vocabulary order, with zero
/// log-probabilities. Useful as an exhaustive reference policy: every node
/// then carries the same policy confidence.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnumeratingPolicy;

impl Policy for EnumeratingPolicy {
    fn sample_tactics(
        &self,
        _statement: &Statement,
        _state: &ProofState,
        candidates: &[String],
        _plan: &SamplingPlan,
        _rng: &mut SearchRng,
    ) -> Result<Vec<Tactic>, PolicyError> {
        Ok(dedup_tactics(
            candidates
                .iter()
                .map(|c| Tactic {
                    text: c.clone(),
                    token_logprobs: vec![0.0; c.split_whitespace().count().max(1)],
                })
                .collect(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_plan() {
        let plan = SamplingPlan::default();
        plan.validate().unwrap();
        assert_eq!(
            plan.temperatures(),
            vec![0.7, 0.7, 0.8, 0.8, 1.0, 1.0, 1.1, 1.1]
        );
    }

    #[test]
    fn plan_counts_must_sum() {
        let plan = SamplingPlan {
            total_k: 9,
            ..SamplingPlan::default()
        };
        assert!(plan.validate().is_err());
        let zero_temp = SamplingPlan::single(0.0, 2);
        assert!(zero_temp.validate().is_err());
    }

    #[test]
    fn dedup_keeps_first() {
        let t = |s: &str, lp: f64| Tactic::new(s, vec![lp]).unwrap();
        let out = dedup_tactics(vec![t("a", -1.0), t("b", -1.0), t("a", -2.0)]);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].token_logprobs, vec![-1.0]);
    }

    #[test]
    fn token_spread() {
        assert_eq!(spread_over_tokens("rw [h] at h2", -2.0), vec![-0.5; 4]);
        assert_eq!(spread_over_tokens("", -1.0), vec![-1.0]);
    }
}
