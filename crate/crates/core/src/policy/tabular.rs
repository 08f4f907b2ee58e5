//! Softmax over per-(state, tactic) logits, fit by smoothed counting.

use std::collections::HashMap;

use rand::Rng;

use super::{dedup_tactics, spread_over_tokens, Policy, PolicyError, SamplingPlan, SearchRng};
use crate::datagen::{parse_policy_prompt, RecordKind, TrainingRecord};
use crate::model::{ProofState, Statement, Tactic};

#[derive(Debug, Clone, PartialEq)]
pub struct TabularSoftmaxPolicy {
    logits: HashMap<String, HashMap<String, f64>>,
    default_logit: f64,
}

impl Default for TabularSoftmaxPolicy {
    /// Uniform over whatever candidates the environment offers.
    fn default() -> Self {
        TabularSoftmaxPolicy {
            logits: HashMap::new(),
            default_logit: 0.0,
        }
    }
}

impl TabularSoftmaxPolicy {
    pub fn new(default_logit: f64) -> Self {
        TabularSoftmaxPolicy {
            logits: HashMap::new(),
            default_logit,
        }
    }

    pub fn set_logit(&mut self, state: &str, tactic: &str, logit: f64) {
        self.logits
            .entry(state.to_string())
            .or_default()
            .insert(tactic.to_string(), logit);
    }

    pub fn logit(&self, state: &str, tactic: &str) -> f64 {
        self.logits
            .get(state)
            .and_then(|m| m.get(tactic))
            .copied()
            .unwrap_or(self.default_logit)
    }

    pub fn default_logit(&self) -> f64 {
        self.default_logit
    }

    /// Probabilities over `candidates` at `temperature`. Falls back to
    /// uniform when every candidate has logit -inf.
    pub fn probabilities(&self, state: &str, candidates: &[String], temperature: f64) -> Vec<f64> {
        let scaled: Vec<f64> = candidates
            .iter()
            .map(|c| self.logit(state, c) / temperature)
            .collect();
        let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return vec![1.0 / candidates.len() as f64; candidates.len()];
        }
        let weights: Vec<f64> = scaled.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }

    /// Most likely candidate; ties resolve to the earliest candidate.
    pub fn greedy(&self, state: &str, candidates: &[String]) -> Option<String> {
        let mut best: Option<(&String, f64)> = None;
        for c in candidates {
            let l = self.logit(state, c);
            if best.is_none_or(|(_, b)| l > b) {
                best = Some((c, l));
            }
        }
        best.map(|(c, _)| c.clone())
    }
}

fn draw(probs: &[f64], rng: &mut SearchRng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding can leave the cumulative sum a hair below 1.
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

impl Policy for TabularSoftmaxPolicy {
    fn sample_tactics(
        &self,
        _statement: &Statement,
        state: &ProofState,
        candidates: &[String],
        plan: &SamplingPlan,
        rng: &mut SearchRng,
    ) -> Result<Vec<Tactic>, PolicyError> {
        plan.validate()?;
        if candidates.is_empty() {
            return Ok(Vec::new());
        }
        // Scores are reported at temperature 1 for every sampling group.
        let scoring = self.probabilities(state.text(), candidates, 1.0);
        let mut drawn = Vec::with_capacity(plan.total_k);
        for group in &plan.temperature_groups {
            let probs = self.probabilities(state.text(), candidates, group.temperature);
            for _ in 0..group.count {
                let i = draw(&probs, rng);
                let text = &candidates[i];
                drawn.push(Tactic {
                    text: text.clone(),
                    token_logprobs: spread_over_tokens(text, scoring[i].ln()),
                });
            }
        }
        Ok(dedup_tactics(drawn))
    }
}

/// Maximum-likelihood fit on policy-step records:
/// `logit(s, a) = ln(count(s, a) + smoothing)` and `default = ln(smoothing)`.
/// An empty record set yields the uniform policy.
pub fn fit_tabular_policy(
    records: &[TrainingRecord],
    smoothing: f64,
) -> Result<TabularSoftmaxPolicy, PolicyError> {
    if !(smoothing.is_finite() && smoothing >= 0.0) {
        return Err(PolicyError::InvalidParameter(format!(
            "smoothing must be a nonnegative number, got {smoothing}"
        )));
    }
    let mut counts: HashMap<String, HashMap<String, u64>> = HashMap::new();
    for rec in records.iter().filter(|r| r.kind == RecordKind::PolicyStep) {
        let Some(state) = parse_policy_prompt(&rec.prompt) else {
            return Err(PolicyError::InvalidParameter(format!(
                "record for `{}` does not follow the policy prompt template",
                rec.statement_id
            )));
        };
        *counts
            .entry(state.to_string())
            .or_default()
            .entry(rec.target.clone())
            .or_default() += 1;
    }
    if counts.is_empty() {
        return Ok(TabularSoftmaxPolicy::default());
    }
    let mut policy = TabularSoftmaxPolicy::new(smoothing.ln());
    for (state, per_tactic) in counts {
        for (tactic, n) in per_tactic {
            policy.set_logit(&state, &tactic, (n as f64 + smoothing).ln());
        }
    }
    Ok(policy)
}
