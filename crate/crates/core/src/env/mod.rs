//! The proving-engine abstraction and desk-scale backends.
//!
//! An [`Environment`] maps a (state, tactic) pair to an [`ApplyResult`].
//! Proof completion is reported as [`ApplyResult::Proved`]; adapters for real
//! engines must map "no remaining goals" onto it.

mod oracle;
mod puzzle;
mod scripted;

use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ProofState;

pub use oracle::{oracle_distances, oracle_shortest_path, oracle_solve};
pub use puzzle::{generate_puzzles, PuzzleFamilyConfig};
pub use scripted::{load_scripted, ScriptedEnvironment, ScriptedParseError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ApplyResult {
    NewState(ProofState),
    Proved,
    Invalid,
    StepTimeout,
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("environment backend failure: {0}")]
    Backend(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeoutPolicy {
    pub whole_search_seconds: f64,
    pub per_step_seconds: f64,
}

impl Default for TimeoutPolicy {
    fn default() -> Self {
        TimeoutPolicy {
            whole_search_seconds: 3600.0,
            per_step_seconds: 60.0,
        }
    }
}

impl TimeoutPolicy {
    pub fn validate(&self) -> Result<(), EnvError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.whole_search_seconds) || !positive(self.per_step_seconds) {
            return Err(EnvError::Config("timeouts must be positive".into()));
        }
        if self.per_step_seconds > self.whole_search_seconds {
            return Err(EnvError::Config(
                "per-step timeout exceeds whole-search timeout".into(),
            ));
        }
        Ok(())
    }

    pub fn per_step(&self) -> Duration {
        Duration::from_secs_f64(self.per_step_seconds)
    }

    pub fn whole_search(&self) -> Duration {
        Duration::from_secs_f64(self.whole_search_seconds)
    }
}

/// A proving engine. Implementations must be safe to call concurrently.
pub trait Environment: Send + Sync {
    fn apply_tactic(
        &self,
        state: &ProofState,
        tactic: &str,
        timeout: &TimeoutPolicy,
    ) -> Result<ApplyResult, EnvError>;

    /// Tactics known to be meaningful at `state`. Synthetic backends expose
    /// their transition table here so table-driven policies have a vocabulary;
    /// open-ended engines return nothing.
    fn candidate_tactics(&self, _state: &ProofState) -> Vec<String> {
        Vec::new()
    }
}

impl<E: Environment + ?Sized> Environment for Arc<E> {
    fn apply_tactic(
        &self,
        state: &ProofState,
        tactic: &str,
        timeout: &TimeoutPolicy,
    ) -> Result<ApplyResult, EnvError> {
        (**self).apply_tactic(state, tactic, timeout)
    }

    fn candidate_tactics(&self, state: &ProofState) -> Vec<String> {
        (**self).candidate_tactics(state)
    }
}

/// Enforces the per-step timeout on backends that cannot bound their own
/// execution time. Each call runs on a worker thread; a late answer is
/// discarded and reported as [`ApplyResult::StepTimeout`].
pub struct Watchdog<E> {
    inner: Arc<E>,
}

impl<E> Watchdog<E> {
    pub fn new(inner: E) -> Self {
        Watchdog {
            inner: Arc::new(inner),
        }
    }
}

impl<E: Environment + 'static> Environment for Watchdog<E> {
    fn apply_tactic(
        &self,
        state: &ProofState,
        tactic: &str,
        timeout: &TimeoutPolicy,
    ) -> Result<ApplyResult, EnvError> {
        let (tx, rx) = mpsc::channel();
        let inner = Arc::clone(&self.inner);
        let state = state.clone();
        let tactic = tactic.to_string();
        let policy = *timeout;
        thread::spawn(move || {
            let _ = tx.send(inner.apply_tactic(&state, &tactic, &policy));
        });
        match rx.recv_timeout(timeout.per_step()) {
            Ok(result) => result,
            Err(mpsc::RecvTimeoutError::Timeout) => Ok(ApplyResult::StepTimeout),
            Err(mpsc::RecvTimeoutError::Disconnected) => {
                Err(EnvError::Backend("worker thread panicked".into()))
            }
        }
    }

    fn candidate_tactics(&self, state: &ProofState) -> Vec<String> {
        self.inner.candidate_tactics(state)
    }
}
