//! Per-iteration statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{emit_policy_records, FilterConfig, IterationState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub iteration: usize,
    pub solve_rate: f64,
    pub new_solved: usize,
    pub cumulative_solved: usize,
    pub cumulative_records: usize,
    /// Shortest found proof length to number of solved statements.
    pub length_histogram: BTreeMap<usize, usize>,
}

pub fn iteration_report(state: &IterationState, filter: &FilterConfig) -> StatsReport {
    let mut length_histogram = BTreeMap::new();
    for entry in state.solved.values() {
        *length_histogram
            .entry(entry.trajectory.steps.len())
            .or_insert(0) += 1;
    }
    StatsReport {
        iteration: state.iteration_t,
        solve_rate: state.solve_rate(),
        new_solved: if state.iteration_t == 0 {
            0
        } else {
            state
                .solved
                .values()
                .filter(|e| e.solved_at_iteration == state.iteration_t)
                .count()
        },
        cumulative_solved: state.solved.len(),
        cumulative_records: emit_policy_records(state, filter).len(),
        length_histogram,
    }
}

fn histogram_field(h: &BTreeMap<usize, usize>) -> String {
    h.iter()
        .map(|(len, n)| format!("{len}:{n}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// `iteration,solve_rate,new_solved,cumulative_solved,cumulative_records,length_histogram`
pub fn stats_csv(rows: &[StatsReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "iteration",
        "solve_rate",
        "new_solved",
        "cumulative_solved",
        "cumulative_records",
        "length_histogram",
    ])
    .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.iteration.to_string(),
            format!("{:.6}", r.solve_rate),
            r.new_solved.to_string(),
            r.cumulative_solved.to_string(),
            r.cumulative_records.to_string(),
            histogram_field(&r.length_histogram),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("csv is utf-8")
}
