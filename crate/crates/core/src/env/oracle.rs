//! Exhaustive reachability over a scripted transition table.

use std::collections::{HashMap, VecDeque};

use super::ScriptedEnvironment;
use crate::model::{Statement, QED};

/// Shortest number of tactic steps from the statement's goal to QED.
pub fn oracle_solve(env: &ScriptedEnvironment, statement: &Statement) -> Option<usize> {
    oracle_shortest_path(env, statement.goal_state.text()).map(|p| p.len())
}

/// One shortest (state, tactic) path from `start` to QED, choosing the
/// lexicographically first tactic at each breadth-first layer.
pub fn oracle_shortest_path(
    env: &ScriptedEnvironment,
    start: &str,
) -> Option<Vec<(String, String)>> {
    if start == QED {
        return None;
    }
    let mut prev: HashMap<&str, (&str, &str)> = HashMap::new();
    let mut queue = VecDeque::from([start]);
    let mut seen: HashMap<&str, ()> = HashMap::from([(start, ())]);
    while let Some(state) = queue.pop_front() {
        for (tactic, dst) in env.outgoing(state) {
            if dst == QED {
                let mut path = vec![(state.to_string(), tactic.to_string())];
                let mut cursor = state;
                while let Some(&(parent, t)) = prev.get(cursor) {
                    path.push((parent.to_string(), t.to_string()));
                    cursor = parent;
                }
                path.reverse();
                return Some(path);
            }
            if seen.insert(dst, ()).is_none() {
                prev.insert(dst, (state, tactic));
                queue.push_back(dst);
            }
        }
    }
    None
}

/// Shortest remaining distance to QED for every state that can reach it,
/// computed by a reverse breadth-first sweep.
pub fn oracle_distances(env: &ScriptedEnvironment) -> HashMap<String, usize> {
    let mut reverse: HashMap<&str, Vec<&str>> = HashMap::new();
    for (src, _, dst) in env.rows() {
        reverse.entry(dst).or_default().push(src);
    }
    let mut dist: HashMap<String, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    for &src in reverse.get(QED).into_iter().flatten() {
        if !dist.contains_key(src) {
            dist.insert(src.to_string(), 1);
            queue.push_back(src);
        }
    }
    while let Some(state) = queue.pop_front() {
        let d = dist[state];
        for &src in reverse.get(state).into_iter().flatten() {
            if !dist.contains_key(src) {
                dist.insert(src.to_string(), d + 1);
                queue.push_back(src);
            }
        }
    }
    dist
}
