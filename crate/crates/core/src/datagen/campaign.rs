//! One full expert-iteration round: search, grow the pool, emit records,
//! refit the tabular policy and optionally the distance critic.

use serde::{Deserialize, Serialize};

use super::{
    emit_distance_records, emit_policy_records, iteration_report, parse_distance_prompt,
    run_iteration, synthesize_diversity_statements, Checkpoint, DatagenError, DiversityConfig,
    FilterConfig, IterationState, RecordKind, StatsReport, TrainingRecord,
};
use crate::critic::{
    decode_distance, fit_distance_critic, parse_distance_tokens, Critic, DistanceError,
    DistanceTable, DEFAULT_LEVELS,
};
use crate::env::Environment;
use crate::model::Statement;
use crate::policy::{fit_tabular_policy, Policy, TabularSoftmaxPolicy};
use crate::search::{SearchConfig, SearchRun};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CriticRefit {
    /// Keep the critic passed in.
    Keep,
    /// Refit a distance table from the retained proofs.
    Distance { levels: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub search: SearchConfig,
    pub filter: FilterConfig,
    pub diversity: DiversityConfig,
    /// Additive count smoothing for the tabular refit.
    pub smoothing: f64,
    pub critic_refit: CriticRefit,
    pub parallelism: usize,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            search: SearchConfig::default(),
            filter: FilterConfig::default(),
            diversity: DiversityConfig::default(),
            smoothing: 1.0,
            critic_refit: CriticRefit::Keep,
            parallelism: 1,
        }
    }
}

pub struct RoundOutput {
    pub state: IterationState,
    pub runs: Vec<SearchRun>,
    pub policy_records: Vec<TrainingRecord>,
    pub distance_records: Vec<TrainingRecord>,
    pub policy: TabularSoftmaxPolicy,
    pub critic: Critic,
    pub report: StatsReport,
}

/// Searches the unsolved pool with `policy`/`critic`, then refits both from
/// everything retained so far. The input state is never modified.
pub fn run_round(
    state: &IterationState,
    env: &dyn Environment,
    policy: &dyn Policy,
    critic: &Critic,
    config: &CampaignConfig,
) -> Result<RoundOutput, DatagenError> {
    let outcome = run_iteration(
        state,
        env,
        policy,
        critic,
        &config.search,
        config.parallelism,
    )?;
    let mut next = outcome.state;
    let unproved: Vec<_> = outcome
        .runs
        .iter()
        .filter(|r| !r.result.proved)
        .map(|r| r.tree.clone())
        .collect();
    next.add_statements(synthesize_diversity_statements(
        &unproved,
        &config.diversity,
    ));

    let models = refit_models(&mut next, critic, config)?;
    let report = iteration_report(&next, &config.filter);
    Ok(RoundOutput {
        state: next,
        runs: outcome.runs,
        policy_records: models.policy_records,
        distance_records: models.distance_records,
        policy: models.policy,
        critic: models.critic,
        report,
    })
}

/// Models fitted on everything a state has retained, plus the records used.
pub struct RefitModels {
    pub policy: TabularSoftmaxPolicy,
    pub critic: Critic,
    pub policy_records: Vec<TrainingRecord>,
    pub distance_records: Vec<TrainingRecord>,
}

/// Refits the policy (and, if configured, the distance critic) from the
/// retained trajectories of `state` and stamps the new versions on it. The
/// result depends only on `state`, so a resumed campaign rebuilds the same
/// models it would have had without the interruption.
pub fn refit_models(
    state: &mut IterationState,
    base_critic: &Critic,
    config: &CampaignConfig,
) -> Result<RefitModels, DatagenError> {
    let policy_records = emit_policy_records(state, &config.filter);
    let policy = fit_tabular_policy(&policy_records, config.smoothing)?;
    state.policy_version = format!("tabular-{}", state.iteration_t);
    let (critic, distance_records) = match config.critic_refit {
        CriticRefit::Keep => (base_critic.clone(), Vec::new()),
        CriticRefit::Distance { levels } => {
            let records = emit_distance_records(state, &config.filter, levels)?;
            let trajectories: Vec<_> = state
                .retained(&config.filter)
                .map(|(_, e)| e.trajectory.clone())
                .collect();
            let table = fit_distance_critic(&trajectories, levels)?;
            state.critic_version = format!("distance-{}", state.iteration_t);
            (Critic::Distance(table), records)
        }
    };
    Ok(RefitModels {
        policy,
        critic,
        policy_records,
        distance_records,
    })
}

/// A resumable sequence of rounds. The first round uses the caller's initial
/// policy; every later round uses the models refit from the state.
pub struct Campaign {
    pub checkpoint: Checkpoint,
    base_critic: Critic,
    refit: Option<(TabularSoftmaxPolicy, Critic)>,
}

impl Campaign {
    /// Fresh campaign whose stats start with the iteration-0 baseline row.
    pub fn start(
        statements: Vec<Statement>,
        base_critic: Critic,
        config: &CampaignConfig,
    ) -> Result<Self, DatagenError> {
        let state = IterationState::new(statements)?;
        let stats = vec![iteration_report(&state, &config.filter)];
        Ok(Campaign {
            checkpoint: Checkpoint { state, stats },
            base_critic,
            refit: None,
        })
    }

    pub fn resume(
        checkpoint: Checkpoint,
        base_critic: Critic,
        config: &CampaignConfig,
    ) -> Result<Self, DatagenError> {
        checkpoint.state.check()?;
        let mut campaign = Campaign {
            checkpoint,
            base_critic,
            refit: None,
        };
        if campaign.checkpoint.state.iteration_t > 0 {
            let mut state = campaign.checkpoint.state.clone();
            let models = refit_models(&mut state, &campaign.base_critic, config)?;
            campaign.refit = Some((models.policy, models.critic));
        }
        Ok(campaign)
    }

    pub fn state(&self) -> &IterationState {
        &self.checkpoint.state
    }

    pub fn stats(&self) -> &[StatsReport] {
        &self.checkpoint.stats
    }

    pub fn step(
        &mut self,
        env: &dyn Environment,
        initial_policy: &dyn Policy,
        config: &CampaignConfig,
    ) -> Result<RoundOutput, DatagenError> {
        let out = match &self.refit {
            Some((policy, critic)) => {
                run_round(&self.checkpoint.state, env, policy, critic, config)?
            }
            None => run_round(
                &self.checkpoint.state,
                env,
                initial_policy,
                &self.base_critic,
                config,
            )?,
        };
        self.checkpoint.state = out.state.clone();
        self.checkpoint.stats.push(out.report.clone());
        self.refit = Some((out.policy.clone(), out.critic.clone()));
        Ok(out)
    }
}

/// Builds a distance table from distance-label records.
pub fn fit_distance_records(
    records: &[TrainingRecord],
    levels: Option<u32>,
) -> Result<DistanceTable, DistanceError> {
    let mut table: Option<DistanceTable> = levels.map(DistanceTable::new);
    for rec in records
        .iter()
        .filter(|r| r.kind == RecordKind::DistanceLabel)
    {
        let path = parse_distance_tokens(&rec.target)?;
        let state = parse_distance_prompt(&rec.prompt).unwrap_or(&rec.prompt);
        let t = table.get_or_insert_with(|| DistanceTable::new(path.levels() as u32));
        if path.levels() as u32 != t.levels() {
            return Err(DistanceError::Levels(path.levels() as u32));
        }
        t.observe(state, decode_distance(&path));
    }
    Ok(table.unwrap_or_else(|| DistanceTable::new(DEFAULT_LEVELS)))
}
