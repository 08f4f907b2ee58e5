mod common;

use std::collections::HashSet;

use common::{bfs_length, random_scripted};
use prover_search::critic::{fit_distance_critic, Critic, DistanceTable};
use prover_search::env::{generate_puzzles, oracle_solve, PuzzleFamilyConfig, ScriptedEnvironment};
use prover_search::model::{parse_tree_dump, NodeStatus};
use prover_search::policy::{EnumeratingPolicy, SamplingPlan, TabularSoftmaxPolicy};
use prover_search::search::{
    run_batch, search, Algorithm, EventKind, EventLog, SearchConfig, Termination,
};

fn exhaustive(algorithm: Algorithm, env: &ScriptedEnvironment) -> SearchConfig {
    SearchConfig {
        algorithm,
        max_steps: env.states().len() + 2,
        sampling_plan: SamplingPlan::single(1.0, 64),
        ..SearchConfig::default()
    }
}

#[test]
fn bfs_matches_independent_breadth_first_lengths() {
    let (mut proved, mut unproved, mut deep) = (0, 0, 0);
    for seed in 0..12 {
        let env = random_scripted(seed, 60, 3, 9);
        let config = exhaustive(Algorithm::Bfs, &env);
        for st in env.statements() {
            let run = search(
                st,
                &env,
                &EnumeratingPolicy,
                &Critic::PolicyConfidence,
                &config,
            )
            .unwrap();
            let expected = bfs_length(&env, st.goal_state.text());
            assert_eq!(
                run.result.proof_length(),
                expected,
                "seed {seed} statement {}",
                st.id
            );
            assert_eq!(expected, oracle_solve(&env, st));
            match expected {
                None => {
                    unproved += 1;
                    assert_eq!(run.result.termination, Termination::Exhausted);
                }
                Some(d) => {
                    proved += 1;
                    deep += usize::from(d >= 3);
                }
            }
        }
    }
    assert!(
        proved > 20 && unproved > 5 && deep > 5,
        "{proved} {unproved} {deep}"
    );
}

#[test]
fn eta_mcts_is_complete_with_exhaustive_budget() {
    for seed in 0..8 {
        let env = random_scripted(100 + seed, 50, 3, 9);
        let config = SearchConfig {
            budget_min: 8,
            ..exhaustive(Algorithm::EtaMcts, &env)
        };
        for st in env.statements() {
            let run = search(
                st,
                &env,
                &EnumeratingPolicy,
                &Critic::PolicyConfidence,
                &config,
            )
            .unwrap();
            assert_eq!(
                run.result.proved,
                oracle_solve(&env, st).is_some(),
                "{}",
                st.id
            );
            if let Some(t) = &run.result.trajectory {
                assert!(t.steps.len() >= oracle_solve(&env, st).unwrap());
            }
        }
    }
}

#[test]
fn proofs_replay_in_the_environment() {
    let env = random_scripted(7, 80, 4, 7);
    let config = SearchConfig {
        max_steps: 40,
        ..SearchConfig::default()
    };
    let policy = TabularSoftmaxPolicy::default();
    for algorithm in [Algorithm::Bfs, Algorithm::EtaMcts] {
        let config = SearchConfig {
            algorithm,
            ..config.clone()
        };
        for st in env.statements() {
            let run = search(st, &env, &policy, &Critic::PolicyConfidence, &config).unwrap();
            let Some(t) = run.result.trajectory else {
                continue;
            };
            let mut state = st.goal_state.text().to_string();
            for (i, step) in t.steps.iter().enumerate() {
                assert_eq!(step.state.text(), state);
                let next = env
                    .lookup(&state, &step.tactic.text)
                    .expect("recorded tactic is valid");
                if i + 1 == t.steps.len() {
                    assert_eq!(next, "QED");
                } else {
                    state = next.to_string();
                }
            }
        }
    }
}

#[test]
fn trees_stay_deduplicated_and_dumps_round_trip() {
    let env = random_scripted(3, 120, 4, 15);
    let policy = TabularSoftmaxPolicy::default();
    for algorithm in [Algorithm::Bfs, Algorithm::EtaMcts] {
        let config = SearchConfig {
            algorithm,
            max_steps: 60,
            ..SearchConfig::default()
        };
        for st in env.statements() {
            let run = search(st, &env, &policy, &Critic::PolicyConfidence, &config).unwrap();
            let tree = &run.tree;
            assert_eq!(tree.state_index_len(), tree.len());
            let texts: HashSet<&str> = tree.nodes().iter().map(|n| n.state.text()).collect();
            assert_eq!(texts.len(), tree.len());
            for n in tree.nodes().iter().skip(1) {
                assert!(n.parent.unwrap() < n.node_id);
                assert!(n.incoming_tactic.is_some());
            }
            let dumped = parse_tree_dump(&tree.dump()).unwrap();
            assert_eq!(dumped.len(), tree.len());
            for (d, n) in dumped.iter().zip(tree.nodes()) {
                assert_eq!(d.state_text, n.state.text());
                assert_eq!(d.status, n.status);
                assert_eq!(d.parent, n.parent);
            }
            let log = EventLog::parse_jsonl(&run.events.to_jsonl()).unwrap();
            assert_eq!(log, run.events);
            let inserts = run.events.of_kind(EventKind::Insert).count()
                + run.events.of_kind(EventKind::Prove).count();
            assert_eq!(inserts, tree.len() - 1);
        }
    }
}

#[test]
fn bfs_selects_each_node_once() {
    let env = random_scripted(11, 100, 3, 20);
    let config = SearchConfig {
        max_steps: 50,
        ..SearchConfig::default()
    };
    for st in env.statements() {
        let run = search(
            st,
            &env,
            &TabularSoftmaxPolicy::default(),
            &Critic::PolicyConfidence,
            &config,
        )
        .unwrap();
        let mut seen = HashSet::new();
        for e in run.events.of_kind(EventKind::Select) {
            assert!(seen.insert(e.node_id), "node {} selected twice", e.node_id);
        }
        assert!(run.result.steps_used <= 50);
        assert!(run.tree.nodes().iter().all(|n| n.visit_count <= 1));
    }
}

#[test]
fn batch_results_do_not_depend_on_parallelism() {
    let env = generate_puzzles(&PuzzleFamilyConfig {
        seed: 5,
        num_statements: 40,
        state_space_size: 200,
        branching: 4,
        solvable_fraction: 0.7,
        max_depth: 6,
    })
    .unwrap();
    let policy = TabularSoftmaxPolicy::default();
    for algorithm in [Algorithm::Bfs, Algorithm::EtaMcts] {
        let config = SearchConfig {
            algorithm,
            max_steps: 30,
            seed: 99,
            ..SearchConfig::default()
        };
        let collect = |p: usize| {
            run_batch(
                env.statements(),
                &env,
                &policy,
                &Critic::PolicyConfidence,
                &config,
                p,
            )
            .unwrap()
            .into_iter()
            .map(|r| {
                let r = r.unwrap();
                (
                    r.result.without_timing(),
                    r.events.to_jsonl(),
                    r.tree.dump(),
                )
            })
            .collect::<Vec<_>>()
        };
        let serial = collect(1);
        assert_eq!(serial, collect(4));
        assert_eq!(serial, collect(3));
    }
}

#[test]
fn distance_critic_fitted_on_oracle_paths_solves_greedily() {
    let env = generate_puzzles(&PuzzleFamilyConfig {
        seed: 21,
        num_statements: 30,
        state_space_size: 300,
        branching: 5,
        solvable_fraction: 1.0,
        max_depth: 8,
    })
    .unwrap();
    let mut table = DistanceTable::new(6);
    for (state, d) in prover_search::env::oracle_distances(&env) {
        table.observe(&state, d as u64);
    }
    let critic = Critic::Distance(table);
    for st in env.statements() {
        let depth = oracle_solve(&env, st).unwrap();
        let config = SearchConfig {
            max_steps: depth,
            ..SearchConfig::default()
        };
        let run = search(st, &env, &EnumeratingPolicy, &critic, &config).unwrap();
        assert_eq!(run.result.proof_length(), Some(depth), "{}", st.id);
        assert_eq!(run.result.steps_used, depth);
    }
    // An empty table carries no information but must still run.
    let empty = Critic::Distance(fit_distance_critic(&[], 6).unwrap());
    let run = search(
        &env.statements()[0],
        &env,
        &EnumeratingPolicy,
        &empty,
        &SearchConfig::default(),
    )
    .unwrap();
    assert!(run.result.proved);
}

#[test]
fn policy_failure_counts_and_statuses() {
    let env = random_scripted(2, 40, 2, 10);
    let config = exhaustive(Algorithm::Bfs, &env);
    for st in env.statements() {
        let run = search(
            st,
            &env,
            &EnumeratingPolicy,
            &Critic::PolicyConfidence,
            &config,
        )
        .unwrap();
        let proved_nodes = run
            .tree
            .nodes()
            .iter()
            .filter(|n| n.status == NodeStatus::Proved)
            .count();
        assert_eq!(proved_nodes, usize::from(run.result.proved));
        assert_eq!(run.result.nodes_created, run.tree.len() - 1);
        assert_eq!(run.result.policy_failures, 0);
    }
}
