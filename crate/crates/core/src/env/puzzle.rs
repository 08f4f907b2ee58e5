//! Seeded generator for families of rewrite puzzles over a shared state graph.
//!
//! The state space is split into a solvable region, where every state sits on
//! a layer `d` and owns one tactic leading to layer `d - 1` (layer 1 leads to
//! QED), and a dead region whose tactics never leave it. Statements share the
//! graph, so proofs found for one statement carry information about others.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EnvError, ScriptedEnvironment};
use crate::model::{ProofState, Statement, QED};

const TACTIC_VOCAB: &[&str] = &[
    "simp",
    "norm_num",
    "linarith",
    "nlinarith [sq_nonneg (a - b)]",
    "ring_nf",
    "omega",
    "intro h",
    "constructor",
    "aesop",
    "field_simp",
    "positivity",
    "rw [mul_comm]",
    "exact h",
    "apply le_of_lt",
    "cases h",
    "use 1",
    "decide",
    "push_cast",
    "gcongr",
    "rcases h with ⟨x, hx⟩",
    "norm_num at h ⊢",
    "simp only [add_comm]",
    "induction n with n ih",
    "exact le_refl _",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PuzzleFamilyConfig {
    pub seed: u64,
    pub num_statements: usize,
    pub state_space_size: usize,
    pub branching: usize,
    pub solvable_fraction: f64,
    pub max_depth: usize,
}

impl PuzzleFamilyConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        let err = |m: &str| Err(EnvError::Config(m.to_string()));
        if self.num_statements == 0 || self.state_space_size == 0 || self.branching == 0 {
            return err("puzzle counts must be positive");
        }
        if !(0.0..=1.0).contains(&self.solvable_fraction) {
            return err("solvable_fraction must lie in [0, 1]");
        }
        if self.num_statements > self.state_space_size {
            return err("num_statements exceeds state_space_size");
        }
        if self.solvable_count() > 0 && self.max_depth == 0 {
            return err("solvable statements need max_depth >= 1");
        }
        Ok(())
    }

    fn solvable_count(&self) -> usize {
        ((self.solvable_fraction * self.num_statements as f64).round() as usize)
            .min(self.num_statements)
    }
}

fn state_text(index: usize) -> String {
    format!("x y : ℝ\nh{index} : Q{index} x y\n⊢ P{index} x y")
}

fn shuffle<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}

fn tactic_names(branching: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut pool: Vec<String> = TACTIC_VOCAB.iter().map(|s| s.to_string()).collect();
    pool.extend((pool.len()..branching).map(|k| format!("apply lemma_{k}")));
    shuffle(&mut pool, rng);
    pool.truncate(branching);
    pool
}

pub fn generate_puzzles(config: &PuzzleFamilyConfig) -> Result<ScriptedEnvironment, EnvError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let space = config.state_space_size;
    let n_solvable = config.solvable_count();
    let n_dead = config.num_statements - n_solvable;

    let solvable_size = if config.solvable_fraction == 0.0 {
        0
    } else {
        ((config.solvable_fraction * space as f64).round() as usize)
            .clamp(n_solvable, space - n_dead)
    };

    let mut order: Vec<usize> = (0..space).collect();
    shuffle(&mut order, &mut rng);
    let (solvable, dead) = order.split_at(solvable_size);

    let layers = config.max_depth.min(solvable_size).max(1);
    let mut by_layer: Vec<Vec<usize>> = vec![Vec::new(); layers + 1];
    for (j, &s) in solvable.iter().enumerate() {
        let layer = if j < layers {
            j + 1
        } else {
            rng.gen_range(1..=layers)
        };
        by_layer[layer].push(s);
    }

    let mut rows = Vec::with_capacity(space * config.branching);
    for (layer, states) in by_layer.iter().enumerate().skip(1) {
        for &s in states {
            let names = tactic_names(config.branching, &mut rng);
            let progress = rng.gen_range(0..config.branching);
            for (k, name) in names.into_iter().enumerate() {
                let dst = if k == progress {
                    if layer == 1 {
                        QED.to_string()
                    } else {
                        let below = &by_layer[layer - 1];
                        state_text(below[rng.gen_range(0..below.len())])
                    }
                } else {
                    state_text(order[rng.gen_range(0..space)])
                };
                rows.push((state_text(s), name, dst));
            }
        }
    }
    for &s in dead {
        let names = tactic_names(config.branching, &mut rng);
        for name in names {
            let dst = state_text(dead[rng.gen_range(0..dead.len())]);
            rows.push((state_text(s), name, dst));
        }
    }

    let mut goals: Vec<usize> = Vec::with_capacity(config.num_statements);
    let mut pick = |region: &[usize], n: usize, rng: &mut ChaCha8Rng| {
        let mut pool = region.to_vec();
        shuffle(&mut pool, rng);
        goals.extend(pool.into_iter().take(n));
    };
    pick(solvable, n_solvable, &mut rng);
    pick(dead, n_dead, &mut rng);
    shuffle(&mut goals, &mut rng);

    let statements = goals
        .into_iter()
        .enumerate()
        .map(|(k, s)| {
            Statement::new(
                format!("puzzle-{}-{k:04}", config.seed),
                ProofState::new(state_text(s)),
                "generated",
            )
            .expect("generated goal states are non-empty")
        })
        .collect();
    ScriptedEnvironment::new(statements, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::oracle_solve;

    fn config(seed: u64, frac: f64) -> PuzzleFamilyConfig {
        PuzzleFamilyConfig {
            seed,
            num_statements: 30,
            state_space_size: 120,
            branching: 3,
            solvable_fraction: frac,
            max_depth: 5,
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate_puzzles(&config(1, 0.5)).unwrap().to_tsv();
        let b = generate_puzzles(&config(1, 0.5)).unwrap().to_tsv();
        let c = generate_puzzles(&config(2, 0.5)).unwrap().to_tsv();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn fully_solvable_family() {
        let env = generate_puzzles(&config(3, 1.0)).unwrap();
        for st in env.statements() {
            let len = oracle_solve(&env, st).expect("reachable");
            assert!(len <= 5);
        }
    }

    #[test]
    fn unsolvable_family_has_no_qed() {
        let env = generate_puzzles(&config(4, 0.0)).unwrap();
        assert!(env.rows().all(|(_, _, dst)| dst != QED));
        assert!(env
            .statements()
            .iter()
            .all(|st| oracle_solve(&env, st).is_none()));
    }

    #[test]
    fn solvable_fraction_is_respected() {
        let env = generate_puzzles(&config(5, 0.5)).unwrap();
        let solved = env
            .statements()
            .iter()
            .filter(|st| oracle_solve(&env, st).is_some())
            .count();
        assert_eq!(solved, 15);
    }

    #[test]
    fn exact_branching_everywhere() {
        let env = generate_puzzles(&config(6, 0.7)).unwrap();
        for state in env.states() {
            assert_eq!(env.outgoing(state).count(), 3, "{state}");
        }
        assert_eq!(env.transition_count(), 120 * 3);
    }

    #[test]
    fn infeasible_configs() {
        let mut c = config(1, 0.5);
        c.max_depth = 0;
        assert!(generate_puzzles(&c).is_err());
        let mut c = config(1, 1.5);
        c.solvable_fraction = 1.5;
        assert!(generate_puzzles(&c).is_err());
        let mut c = config(1, 0.5);
        c.num_statements = 500;
        assert!(generate_puzzles(&c).is_err());
        let mut c = config(1, 0.0);
        c.max_depth = 0;
        assert!(generate_puzzles(&c).is_ok());
    }
}
