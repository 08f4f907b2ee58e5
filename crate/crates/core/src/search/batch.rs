//! One independent search per statement, optionally in parallel.

use rayon::prelude::*;

use super::{search, SearchConfig, SearchError, SearchRun};
use crate::critic::Critic;
use crate::env::Environment;
use crate::model::Statement;
use crate::policy::Policy;

/// Seed of the `index`-th statement in a batch.
pub fn statement_seed(base: u64, index: usize) -> u64 {
    base ^ index as u64
}

/// Results come back in input order and do not depend on `parallelism`.
/// Errors are reported per statement.
pub fn run_batch(
    statements: &[Statement],
    env: &dyn Environment,
    policy: &dyn Policy,
    critic: &Critic,
    config: &SearchConfig,
    parallelism: usize,
) -> Result<Vec<Result<SearchRun, SearchError>>, SearchError> {
    if parallelism == 0 {
        return Err(SearchError::Config("parallelism must be at least 1".into()));
    }
    config.validate()?;
    let one = |(index, statement): (usize, &Statement)| {
        let config = SearchConfig {
            seed: statement_seed(config.seed, index),
            ..config.clone()
        };
        search(statement, env, policy, critic, &config)
    };
    if parallelism == 1 {
        return Ok(statements.iter().enumerate().map(one).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| SearchError::Config(e.to_string()))?;
    Ok(pool.install(|| statements.par_iter().enumerate().map(one).collect()))
}

/// `statement_id,proved,steps_used,nodes_created,proof_length,termination,wall_seconds`
pub fn results_csv<'a>(results: impl IntoIterator<Item = &'a super::SearchResult>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "statement_id",
        "proved",
        "steps_used",
        "nodes_created",
        "proof_length",
        "termination",
        "wall_seconds",
    ])
    .expect("in-memory write");
    for r in results {
        w.write_record([
            r.statement_id.clone(),
            r.proved.to_string(),
            r.steps_used.to_string(),
            r.nodes_created.to_string(),
            r.proof_length().map_or(String::new(), |l| l.to_string()),
            r.termination.as_str().to_string(),
            format!("{:.6}", r.wall_seconds),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("csv is utf-8")
}
