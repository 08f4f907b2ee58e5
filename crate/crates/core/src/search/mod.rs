//! Best-first search and eta-MCTS over tactic applications.
//!
//! Both engines share the same expansion machinery: sample tactics from the
//! policy, execute them against the environment, and insert the resulting
//! states into the tree with exact-string deduplication. A proof ends the
//! search as soon as it is created.

mod batch;
mod bfs;
mod events;
mod formulas;
mod mcts;

use std::time::Instant;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::critic::Critic;
use crate::env::{ApplyResult, EnvError, Environment, TimeoutPolicy};
use crate::model::{
    InsertResult, ModelError, NodeId, ProofState, SearchTree, Statement, Tactic, Trajectory,
};
use crate::policy::{Policy, PolicyError, SamplingPlan, SearchRng};

pub use batch::{results_csv, run_batch, statement_seed};
pub use bfs::bfs_search;
pub use events::{EventKind, EventLog, SearchEvent};
pub use formulas::{expansion_budget, ucb, ImportanceRecord};
pub use mcts::eta_mcts_search;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Bfs,
    EtaMcts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    /// Maximum number of selections.
    pub max_steps: usize,
    pub sampling_plan: SamplingPlan,
    pub timeout: TimeoutPolicy,
    pub ucb_alpha: f64,
    pub budget_alpha: f64,
    pub budget_min: usize,
    pub budget_max: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            algorithm: Algorithm::Bfs,
            max_steps: 800,
            sampling_plan: SamplingPlan::default(),
            timeout: TimeoutPolicy::default(),
            ucb_alpha: 1.0,
            budget_alpha: 4.0,
            budget_min: 1,
            budget_max: 8,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::Config(m.to_string()));
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        if !(self.ucb_alpha.is_finite() && self.ucb_alpha >= 0.0)
            || !(self.budget_alpha.is_finite() && self.budget_alpha >= 0.0)
        {
            return bad("ucb_alpha and budget_alpha must be nonnegative");
        }
        if self.budget_min == 0 || self.budget_min > self.budget_max {
            return bad("expansion budgets need 1 <= budget_min <= budget_max");
        }
        self.sampling_plan.validate()?;
        self.timeout
            .validate()
            .map_err(|e| SearchError::Config(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Proved,
    StepBudget,
    Timeout,
    Exhausted,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Proved => "proved",
            Termination::StepBudget => "step_budget",
            Termination::Timeout => "timeout",
            Termination::Exhausted => "exhausted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub statement_id: String,
    pub proved: bool,
    pub trajectory: Option<Trajectory>,
    pub steps_used: usize,
    /// Nodes added below the root.
    pub nodes_created: usize,
    pub wall_seconds: f64,
    pub termination: Termination,
    pub invalid_tactics: usize,
    pub step_timeouts: usize,
    pub policy_failures: usize,
}

impl SearchResult {
    pub fn proof_length(&self) -> Option<usize> {
        self.trajectory.as_ref().map(|t| t.steps.len())
    }

    /// The same result with wall-clock time zeroed, for equality checks.
    pub fn without_timing(&self) -> Self {
        SearchResult {
            wall_seconds: 0.0,
            ..self.clone()
        }
    }
}

/// Everything a finished search produced.
#[derive(Debug, Clone)]
pub struct SearchRun {
    pub result: SearchResult,
    pub tree: SearchTree,
    pub events: EventLog,
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Runs the engine selected by `config.algorithm`.
pub fn search(
    statement: &Statement,
    env: &dyn Environment,
    policy: &dyn Policy,
    critic: &Critic,
    config: &SearchConfig,
) -> Result<SearchRun, SearchError> {
    match config.algorithm {
        Algorithm::Bfs => bfs_search(statement, env, policy, critic, config),
        Algorithm::EtaMcts => eta_mcts_search(statement, env, policy, critic, config),
    }
}

/// Outcome of executing one tactic during an expansion.
pub(crate) enum Applied {
    Inserted(NodeId),
    Duplicate,
    Rejected,
    Proved(NodeId),
}

/// Mutable state shared by both engines during one search.
pub(crate) struct Session<'a> {
    pub statement: &'a Statement,
    pub env: &'a dyn Environment,
    pub policy: &'a dyn Policy,
    pub critic: &'a Critic,
    pub config: &'a SearchConfig,
    pub tree: SearchTree,
    pub events: EventLog,
    pub rng: SearchRng,
    pub started: Instant,
    pub steps: usize,
    pub invalid: usize,
    pub timeouts: usize,
    pub policy_failures: usize,
}

impl<'a> Session<'a> {
    pub fn new(
        statement: &'a Statement,
        env: &'a dyn Environment,
        policy: &'a dyn Policy,
        critic: &'a Critic,
        config: &'a SearchConfig,
    ) -> Result<Self, SearchError> {
        config.validate()?;
        let root = critic.score(&statement.goal_state, None);
        Ok(Session {
            statement,
            env,
            policy,
            critic,
            config,
            tree: SearchTree::new(statement.clone(), root.value),
            events: EventLog::default(),
            rng: SearchRng::seed_from_u64(config.seed),
            started: Instant::now(),
            steps: 0,
            invalid: 0,
            timeouts: 0,
            policy_failures: 0,
        })
    }

    pub fn timed_out(&self) -> bool {
        self.started.elapsed() >= self.config.timeout.whole_search()
    }

    /// Samples tactics for `node`. Backend failures of an external policy
    /// count as an empty expansion; plan errors abort the search.
    pub fn sample(&mut self, node: NodeId) -> Result<Vec<Tactic>, SearchError> {
        let state = self.tree.nodes()[node].state.clone();
        let candidates = self.env.candidate_tactics(&state);
        match self.policy.sample_tactics(
            self.statement,
            &state,
            &candidates,
            &self.config.sampling_plan,
            &mut self.rng,
        ) {
            Ok(mut tactics) => {
                tactics.truncate(self.config.sampling_plan.total_k);
                Ok(tactics)
            }
            Err(
                e @ (PolicyError::Timeout(_)
                | PolicyError::Malformed(_)
                | PolicyError::Connection(_)),
            ) => {
                self.policy_failures += 1;
                self.events.push(
                    self.steps,
                    EventKind::Reject,
                    node,
                    json!({ "reason": "policy", "error": e.to_string() }),
                );
                Ok(Vec::new())
            }
            Err(e) => Err(e.into()),
        }
    }

    pub fn apply(&mut self, parent: NodeId, tactic: Tactic) -> Result<Applied, SearchError> {
        let state = self.tree.nodes()[parent].state.clone();
        let outcome = self
            .env
            .apply_tactic(&state, &tactic.text, &self.config.timeout)?;
        let step = self.steps;
        match outcome {
            ApplyResult::Invalid | ApplyResult::StepTimeout => {
                let reason = if matches!(outcome, ApplyResult::Invalid) {
                    self.invalid += 1;
                    "invalid"
                } else {
                    self.timeouts += 1;
                    "step_timeout"
                };
                self.events.push(
                    step,
                    EventKind::Reject,
                    parent,
                    json!({ "tactic": tactic.text, "reason": reason }),
                );
                Ok(Applied::Rejected)
            }
            ApplyResult::Proved => {
                let text = tactic.text.clone();
                let score = self.critic.score(&ProofState::qed(), Some(&tactic));
                match self
                    .tree
                    .insert_node(parent, tactic, ProofState::qed(), score.value)?
                {
                    InsertResult::Inserted(id) => {
                        let depth = self.tree.nodes()[id].depth;
                        self.events.push(
                            step,
                            EventKind::Prove,
                            id,
                            json!({ "parent": parent, "tactic": text, "length": depth }),
                        );
                        Ok(Applied::Proved(id))
                    }
                    InsertResult::Duplicate(_) => Ok(Applied::Duplicate),
                }
            }
            ApplyResult::NewState(next) => {
                let score = self.critic.score(&next, Some(&tactic));
                let text = tactic.text.clone();
                match self.tree.insert_node(parent, tactic, next, score.value)? {
                    InsertResult::Inserted(id) => {
                        self.events.push(
                            step,
                            EventKind::Insert,
                            id,
                            json!({
                                "parent": parent,
                                "tactic": text,
                                "critic_score": score.value,
                                "confidence": score.confidence,
                                "distance": score.distance.as_ref().map(|d| d.entries().to_vec()),
                            }),
                        );
                        Ok(Applied::Inserted(id))
                    }
                    InsertResult::Duplicate(existing) => {
                        self.events.push(
                            step,
                            EventKind::Dedup,
                            existing,
                            json!({ "parent": parent, "tactic": text }),
                        );
                        Ok(Applied::Duplicate)
                    }
                }
            }
        }
    }

    pub fn finish(
        self,
        termination: Termination,
        proved_node: Option<NodeId>,
    ) -> Result<SearchRun, SearchError> {
        let trajectory = proved_node
            .map(|id| self.tree.extract_trajectory(id))
            .transpose()?;
        let result = SearchResult {
            statement_id: self.statement.id.clone(),
            proved: trajectory.is_some(),
            trajectory,
            steps_used: self.steps,
            nodes_created: self.tree.len() - 1,
            wall_seconds: self.started.elapsed().as_secs_f64(),
            termination,
            invalid_tactics: self.invalid,
            step_timeouts: self.timeouts,
            policy_failures: self.policy_failures,
        };
        Ok(SearchRun {
            result,
            tree: self.tree,
            events: self.events,
        })
    }
}
