//! Expert-iteration data generation.
//!
//! Each round searches only the statements that are still unsolved, moves
//! newly proved ones into the solved set together with their trajectory, and
//! turns the retained trajectories into policy and distance-critic records.

mod campaign;
mod checkpoint;
mod diversity;
mod records;
mod report;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::critic::{Critic, DistanceError};
use crate::env::Environment;
use crate::model::{Statement, Trajectory};
use crate::policy::{Policy, PolicyError};
use crate::search::{run_batch, SearchConfig, SearchError, SearchRun};

pub use campaign::{
    fit_distance_records, refit_models, run_round, Campaign, CampaignConfig, CriticRefit,
    RefitModels, RoundOutput,
};
pub use checkpoint::{Checkpoint, CheckpointError};
pub use diversity::{synthesize_diversity_statements, DiversityConfig};
pub use records::{
    distance_prompt, distance_record, parse_distance_prompt, parse_policy_prompt,
    parse_record_line, parse_records_jsonl, policy_prompt, policy_record, prm_record,
    records_to_jsonl, RecordError, RecordKind, TrainingRecord,
};
pub use report::{iteration_report, stats_csv, StatsReport};

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("inconsistent iteration state: {0}")]
    Inconsistent(String),
    #[error("search for `{statement}` failed: {source}")]
    Search {
        statement: String,
        source: SearchError,
    },
    #[error(transparent)]
    Batch(#[from] SearchError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Distance(#[from] DistanceError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvedEntry {
    pub trajectory: Trajectory,
    pub solved_at_iteration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationState {
    pub iteration_t: usize,
    /// The statement pool in insertion order.
    pub statements: Vec<Statement>,
    pub solved: BTreeMap<String, SolvedEntry>,
    pub unsolved: BTreeSet<String>,
    pub policy_version: String,
    pub critic_version: String,
}

impl IterationState {
    pub fn new(statements: Vec<Statement>) -> Result<Self, DatagenError> {
        let mut ids = HashSet::new();
        for s in &statements {
            if !ids.insert(s.id.clone()) {
                return Err(DatagenError::Inconsistent(format!(
                    "duplicate statement id `{}`",
                    s.id
                )));
            }
        }
        Ok(IterationState {
            iteration_t: 0,
            unsolved: statements.iter().map(|s| s.id.clone()).collect(),
            statements,
            solved: BTreeMap::new(),
            policy_version: "initial".to_string(),
            critic_version: "initial".to_string(),
        })
    }

    /// Solved and unsolved partition the pool; no solve is from the future.
    pub fn check(&self) -> Result<(), DatagenError> {
        let pool: BTreeSet<&str> = self.statements.iter().map(|s| s.id.as_str()).collect();
        if pool.len() != self.statements.len() {
            return Err(DatagenError::Inconsistent("duplicate statement ids".into()));
        }
        let covered: BTreeSet<&str> = self
            .solved
            .keys()
            .chain(self.unsolved.iter())
            .map(String::as_str)
            .collect();
        if covered != pool || self.solved.len() + self.unsolved.len() != pool.len() {
            return Err(DatagenError::Inconsistent(
                "solved and unsolved do not partition the pool".into(),
            ));
        }
        if let Some((id, _)) = self
            .solved
            .iter()
            .find(|(_, e)| e.solved_at_iteration > self.iteration_t || !e.trajectory.proved)
        {
            return Err(DatagenError::Inconsistent(format!(
                "bad solved entry for `{id}`"
            )));
        }
        Ok(())
    }

    pub fn unsolved_statements(&self) -> Vec<&Statement> {
        self.statements
            .iter()
            .filter(|s| self.unsolved.contains(&s.id))
            .collect()
    }

    /// Adds statements whose ids are new to the pool; returns how many.
    pub fn add_statements(&mut self, statements: Vec<Statement>) -> usize {
        let mut added = 0;
        for s in statements {
            if self.solved.contains_key(&s.id) || self.unsolved.contains(&s.id) {
                continue;
            }
            self.unsolved.insert(s.id.clone());
            self.statements.push(s);
            added += 1;
        }
        added
    }

    pub fn solve_rate(&self) -> f64 {
        if self.statements.is_empty() {
            0.0
        } else {
            self.solved.len() as f64 / self.statements.len() as f64
        }
    }

    /// Trajectories that survive the easy-statement filter, in id order.
    pub fn retained<'a>(
        &'a self,
        filter: &'a FilterConfig,
    ) -> impl Iterator<Item = (&'a String, &'a SolvedEntry)> {
        self.solved
            .iter()
            .filter(move |(_, e)| e.solved_at_iteration >= filter.easy_cutoff_iteration)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Drop statements solved at an iteration below this value.
    pub easy_cutoff_iteration: usize,
    pub max_records_per_statement: Option<usize>,
}

/// Per-round seed so repeated searches of an unsolved statement explore
/// differently from one round to the next.
pub fn round_seed(base: u64, iteration: usize) -> u64 {
    base.wrapping_add((iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Result of one search round: the next state plus every search run.
pub struct IterationOutcome {
    pub state: IterationState,
    pub runs: Vec<SearchRun>,
}

/// Searches every unsolved statement once. Statements proved here are
/// recorded with `solved_at_iteration = t + 1`. Any search failure leaves the
/// input state untouched.
pub fn run_iteration(
    state: &IterationState,
    env: &dyn Environment,
    policy: &dyn Policy,
    critic: &Critic,
    config: &SearchConfig,
    parallelism: usize,
) -> Result<IterationOutcome, DatagenError> {
    state.check()?;
    let work: Vec<Statement> = state.unsolved_statements().into_iter().cloned().collect();
    let config = SearchConfig {
        seed: round_seed(config.seed, state.iteration_t),
        ..config.clone()
    };
    let results = run_batch(&work, env, policy, critic, &config, parallelism)?;
    let mut next = state.clone();
    next.iteration_t += 1;
    let mut runs = Vec::with_capacity(results.len());
    for (statement, res) in work.iter().zip(results) {
        let run = res.map_err(|source| DatagenError::Search {
            statement: statement.id.clone(),
            source,
        })?;
        if let Some(traj) = &run.result.trajectory {
            next.unsolved.remove(&statement.id);
            next.solved.insert(
                statement.id.clone(),
                SolvedEntry {
                    trajectory: traj.clone(),
                    solved_at_iteration: next.iteration_t,
                },
            );
        }
        runs.push(run);
    }
    Ok(IterationOutcome { state: next, runs })
}

pub fn emit_policy_records(state: &IterationState, filter: &FilterConfig) -> Vec<TrainingRecord> {
    let mut out = Vec::new();
    for (id, entry) in state.retained(filter) {
        let cap = filter.max_records_per_statement.unwrap_or(usize::MAX);
        out.extend(
            entry
                .trajectory
                .steps
                .iter()
                .take(cap)
                .map(|step| policy_record(id, step.state.text(), &step.tactic.text)),
        );
    }
    out
}

/// One record per step with the remaining step count as target.
pub fn emit_distance_records(
    state: &IterationState,
    filter: &FilterConfig,
    levels: u32,
) -> Result<Vec<TrainingRecord>, DistanceError> {
    let mut out = Vec::new();
    for (id, entry) in state.retained(filter) {
        let cap = filter.max_records_per_statement.unwrap_or(usize::MAX);
        let m = entry.trajectory.steps.len();
        for (i, step) in entry.trajectory.steps.iter().enumerate().take(cap) {
            out.push(distance_record(
                id,
                step.state.text(),
                (m - i) as u64,
                levels,
            )?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critic::{decode_distance, parse_distance_tokens};
    use crate::model::{ProofState, Tactic, TrajectoryStep};

    fn statement(id: &str) -> Statement {
        Statement::new(id, ProofState::new(format!("⊢ {id}")), "t").unwrap()
    }

    fn traj(id: &str, n: usize) -> Trajectory {
        Trajectory {
            statement: statement(id),
            steps: (0..n)
                .map(|i| TrajectoryStep {
                    state: ProofState::new(format!("⊢ {id} {i}")),
                    tactic: Tactic::unscored(format!("tac{i}")),
                })
                .collect(),
            terminal_state: ProofState::qed(),
            proved: true,
        }
    }

    fn solved_state(n: usize, at: usize) -> IterationState {
        let mut s = IterationState::new(vec![statement("a"), statement("b")]).unwrap();
        s.iteration_t = at;
        s.unsolved.remove("a");
        s.solved.insert(
            "a".into(),
            SolvedEntry {
                trajectory: traj("a", n),
                solved_at_iteration: at,
            },
        );
        s.check().unwrap();
        s
    }

    #[test]
    fn one_policy_record_per_step() {
        let s = solved_state(3, 1);
        let recs = emit_policy_records(&s, &FilterConfig::default());
        assert_eq!(recs.len(), 3);
        assert!(recs.iter().all(|r| r.prompt.contains("Next tactic:")));
        let cut = FilterConfig {
            easy_cutoff_iteration: 2,
            ..FilterConfig::default()
        };
        assert!(emit_policy_records(&s, &cut).is_empty());
        let capped = FilterConfig {
            max_records_per_statement: Some(2),
            ..FilterConfig::default()
        };
        assert_eq!(emit_policy_records(&s, &capped).len(), 2);
    }

    #[test]
    fn distance_countdown() {
        let s = solved_state(3, 1);
        let recs = emit_distance_records(&s, &FilterConfig::default(), 6).unwrap();
        let decoded: Vec<u64> = recs
            .iter()
            .map(|r| decode_distance(&parse_distance_tokens(&r.target).unwrap()))
            .collect();
        assert_eq!(decoded, vec![3, 2, 1]);
    }

    #[test]
    fn long_proof_is_clamped() {
        let s = solved_state(70, 1);
        let recs = emit_distance_records(&s, &FilterConfig::default(), 6).unwrap();
        assert_eq!(
            decode_distance(&parse_distance_tokens(&recs[0].target).unwrap()),
            64
        );
        assert_eq!(
            decode_distance(&parse_distance_tokens(&recs[69].target).unwrap()),
            1
        );
    }

    #[test]
    fn partition_is_checked() {
        let mut s = solved_state(1, 1);
        s.unsolved.insert("a".into());
        assert!(s.check().is_err());
        assert!(IterationState::new(vec![statement("x"), statement("x")]).is_err());
    }

    #[test]
    fn add_statements_skips_known_ids() {
        let mut s = solved_state(1, 1);
        assert_eq!(s.add_statements(vec![statement("a"), statement("c")]), 1);
        assert!(s.unsolved.contains("c"));
        s.check().unwrap();
    }
}
