#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};

use prover_search::env::{ApplyResult, Environment, ScriptedEnvironment, TimeoutPolicy};
use prover_search::model::{ProofState, Statement, QED};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random transition table over `n` states named `s{i}`. Roughly one
/// transition in `qed_every` finishes the proof; the last quarter of the
/// states only lead among themselves and never reach a proof. Statements are
/// drawn from states with outgoing transitions.
pub fn random_scripted(
    seed: u64,
    n: usize,
    branching: usize,
    qed_every: usize,
) -> ScriptedEnvironment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let dead = n - n / 4;
    for i in 0..n {
        // Some states are leaves with no way forward.
        if rng.gen_range(0..6) == 0 {
            continue;
        }
        for k in 0..branching {
            let dst = if i >= dead {
                format!("s{}", rng.gen_range(dead..n))
            } else if rng.gen_range(0..qed_every) == 0 {
                QED.to_string()
            } else {
                format!("s{}", rng.gen_range(0..n))
            };
            rows.push((format!("s{i}"), format!("tac{k}"), dst));
        }
    }
    let sources: HashSet<String> = rows.iter().map(|r| r.0.clone()).collect();
    let statements: Vec<Statement> = (0..n)
        .step_by(2)
        .map(|i| format!("s{i}"))
        .filter(|s| sources.contains(s))
        .take(30)
        .map(|s| Statement::new(format!("st-{s}"), ProofState::new(s), "generated").unwrap())
        .collect();
    ScriptedEnvironment::new(statements, rows).unwrap()
}

/// Breadth-first shortest proof length written directly against the
/// `Environment` trait, independent of the library's oracle.
pub fn bfs_length(env: &dyn Environment, start: &str) -> Option<usize> {
    let timeout = TimeoutPolicy::default();
    let mut dist: HashMap<String, usize> = HashMap::from([(start.to_string(), 0)]);
    let mut queue = VecDeque::from([start.to_string()]);
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        let state = ProofState::new(s.clone());
        for tac in env.candidate_tactics(&state) {
            match env.apply_tactic(&state, &tac, &timeout).unwrap() {
                ApplyResult::Proved => return Some(d + 1),
                ApplyResult::NewState(next) => {
                    if !dist.contains_key(next.text()) {
                        dist.insert(next.text().to_string(), d + 1);
                        queue.push_back(next.text().to_string());
                    }
                }
                ApplyResult::Invalid | ApplyResult::StepTimeout => {}
            }
        }
    }
    None
}
