//! Command-line surface over `prover-search`: single searches, batches,
//! expert-iteration campaigns, the distance codec and puzzle generation.

pub mod config;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use prover_search::critic::{
    decode_distance, encode_distance, fit_prm, label_prm_nodes, parse_distance_tokens,
    parse_prm_labels, serialize_distance_tokens, write_prm_labels, Critic, DEFAULT_LEVELS,
};
use prover_search::datagen::{
    emit_distance_records, emit_policy_records, fit_distance_records, parse_records_jsonl,
    records_to_jsonl, stats_csv, Campaign, Checkpoint,
};
use prover_search::env::{
    generate_puzzles, load_scripted, oracle_solve, PuzzleFamilyConfig, ScriptedEnvironment,
};
use prover_search::policy::{
    fit_tabular_policy, EnumeratingPolicy, ExternalPolicy, Policy, TabularSoftmaxPolicy,
};
use prover_search::search::{results_csv, run_batch, search};
use thiserror::Error;

pub use config::{CriticSpec, EnvironmentSpec, PolicySpec, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Search(#[from] prover_search::search::SearchError),
    #[error(transparent)]
    Datagen(#[from] prover_search::datagen::DatagenError),
    #[error(transparent)]
    Checkpoint(#[from] prover_search::datagen::CheckpointError),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "prover",
    version,
    about = "Guided proof search and expert-iteration data generation"
)]
pub struct Cli {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured number of worker threads.
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Distance-codec depth for `codec` and the distance critic.
    #[arg(long, global = true)]
    pub levels: Option<u32>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search one statement; exits 0 iff it is proved.
    Search { statement_id: String },
    /// Search every statement of the environment.
    Batch,
    /// Run expert-iteration rounds.
    Iterate {
        #[arg(long, default_value_t = 1)]
        iterations: usize,
        /// Continue from the checkpoint in the output directory up to
        /// `--iterations` rounds in total.
        #[arg(long)]
        resume: bool,
    },
    /// Encode a step count, or decode a `<num_box>` token string.
    Codec { value: String },
    /// Print the stats table of a campaign checkpoint.
    Stats {
        /// Defaults to `checkpoint.json` in the output directory.
        checkpoint: Option<PathBuf>,
    },
    /// Write a generated puzzle family as a transition table.
    GenPuzzles(GenPuzzles),
}

#[derive(Debug, Args)]
pub struct GenPuzzles {
    #[arg(long)]
    pub statements: Option<usize>,
    #[arg(long)]
    pub states: Option<usize>,
    #[arg(long)]
    pub branching: Option<usize>,
    #[arg(long)]
    pub solvable_fraction: Option<f64>,
    #[arg(long)]
    pub max_depth: Option<usize>,
}

/// Exit status of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    NotProved,
}

impl Cli {
    fn run_config(&self) -> Result<RunConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(p) = self.parallelism {
            config.parallelism = p;
        }
        if let Some(out) = &self.out {
            config.out = out.clone();
        }
        if let Some(levels) = self.levels {
            config.iterate.levels = levels;
            if let CriticSpec::Distance { levels: l, .. } = &mut config.critic {
                *l = Some(levels);
            }
        }
        if config.parallelism == 0 {
            return Err(CliError::Config("parallelism must be at least 1".into()));
        }
        Ok(config)
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Statement ids as file-name stems.
fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn load_environment(config: &RunConfig) -> Result<ScriptedEnvironment, CliError> {
    match &config.environment {
        None => Err(CliError::Config(
            "this command needs an [environment] section".into(),
        )),
        Some(EnvironmentSpec::Scripted { path }) => {
            load_scripted(path).map_err(|e| CliError::Input(e.to_string()))
        }
        Some(EnvironmentSpec::Puzzles(p)) => {
            generate_puzzles(p).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

fn build_policy(spec: &PolicySpec) -> Result<Box<dyn Policy>, CliError> {
    Ok(match spec {
        PolicySpec::Uniform {} => Box::new(TabularSoftmaxPolicy::default()),
        PolicySpec::Enumerate {} => Box::new(EnumeratingPolicy),
        PolicySpec::Tabular { records, smoothing } => {
            let recs =
                parse_records_jsonl(&read(records)?).map_err(|e| CliError::Input(e.to_string()))?;
            Box::new(
                fit_tabular_policy(&recs, *smoothing)
                    .map_err(|e| CliError::Config(e.to_string()))?,
            )
        }
        PolicySpec::External {
            endpoint,
            timeout_seconds,
        } => {
            if !(timeout_seconds.is_finite() && *timeout_seconds > 0.0) {
                return Err(CliError::Config(
                    "policy timeout_seconds must be positive".into(),
                ));
            }
            Box::new(ExternalPolicy::new(
                endpoint.clone(),
                Duration::from_secs_f64(*timeout_seconds),
            ))
        }
    })
}

fn build_critic(spec: &CriticSpec) -> Result<Critic, CliError> {
    Ok(match spec {
        CriticSpec::Pc {} => Critic::PolicyConfidence,
        CriticSpec::Prm { labels } => {
            let labels =
                parse_prm_labels(&read(labels)?).map_err(|e| CliError::Input(e.to_string()))?;
            Critic::Prm(fit_prm(&labels))
        }
        CriticSpec::Distance { records, levels } => {
            let recs =
                parse_records_jsonl(&read(records)?).map_err(|e| CliError::Input(e.to_string()))?;
            Critic::Distance(
                fit_distance_records(&recs, *levels).map_err(|e| CliError::Input(e.to_string()))?,
            )
        }
    })
}

pub fn run(cli: &Cli) -> Result<Status, CliError> {
    match &cli.command {
        Command::Codec { value } => codec(value, cli.levels.unwrap_or(DEFAULT_LEVELS)),
        Command::Search { statement_id } => cmd_search(&cli.run_config()?, statement_id),
        Command::Batch => cmd_batch(&cli.run_config()?),
        Command::Iterate { iterations, resume } => {
            cmd_iterate(&cli.run_config()?, *iterations, *resume)
        }
        Command::Stats { checkpoint } => {
            let config = cli.run_config()?;
            let path = checkpoint
                .clone()
                .unwrap_or_else(|| config.out.join("checkpoint.json"));
            let cp = Checkpoint::load(&path)?;
            print!("{}", stats_csv(&cp.stats));
            Ok(Status::Success)
        }
        Command::GenPuzzles(args) => cmd_gen_puzzles(&cli.run_config()?, args),
    }
}

fn codec(value: &str, levels: u32) -> Result<Status, CliError> {
    let value = value.trim();
    if value.starts_with('<') {
        let path = parse_distance_tokens(value).map_err(|e| CliError::Input(e.to_string()))?;
        if serialize_distance_tokens(&path) != value {
            return Err(CliError::Input("token string does not round-trip".into()));
        }
        println!("{}", decode_distance(&path));
        println!("{path}");
        return Ok(Status::Success);
    }
    let n: u64 = value.parse().map_err(|_| {
        CliError::Input(format!(
            "`{value}` is neither a step count nor a token string"
        ))
    })?;
    let path = encode_distance(n, levels).map_err(|e| CliError::Input(e.to_string()))?;
    let tokens = serialize_distance_tokens(&path);
    let back = parse_distance_tokens(&tokens).map_err(|e| CliError::Input(e.to_string()))?;
    if back != path {
        return Err(CliError::Input("encoding does not round-trip".into()));
    }
    println!("{path}");
    println!("{tokens}");
    Ok(Status::Success)
}

fn cmd_search(config: &RunConfig, statement_id: &str) -> Result<Status, CliError> {
    let env = load_environment(config)?;
    let statement = env
        .statement(statement_id)
        .ok_or_else(|| CliError::Input(format!("unknown statement `{statement_id}`")))?;
    let policy = build_policy(&config.policy)?;
    let critic = build_critic(&config.critic)?;
    let run = search(
        statement,
        &env,
        policy.as_ref(),
        &critic,
        &config.search_config(),
    )?;
    let stem = file_stem(statement_id);
    write(
        &config.out,
        &format!("{stem}.events.jsonl"),
        &run.events.to_jsonl(),
    )?;
    write(&config.out, &format!("{stem}.tree.tsv"), &run.tree.dump())?;
    let r = &run.result;
    match r.proof_length() {
        Some(len) => println!(
            "proved=true length={len} steps={} nodes={} termination={}",
            r.steps_used,
            r.nodes_created,
            r.termination.as_str()
        ),
        None => println!(
            "proved=false steps={} nodes={} termination={}",
            r.steps_used,
            r.nodes_created,
            r.termination.as_str()
        ),
    }
    if let Some(t) = &r.trajectory {
        for step in &t.steps {
            println!("  {}", step.tactic.text);
        }
    }
    Ok(if r.proved {
        Status::Success
    } else {
        Status::NotProved
    })
}

fn cmd_batch(config: &RunConfig) -> Result<Status, CliError> {
    let env = load_environment(config)?;
    let policy = build_policy(&config.policy)?;
    let critic = build_critic(&config.critic)?;
    let runs = run_batch(
        env.statements(),
        &env,
        policy.as_ref(),
        &critic,
        &config.search_config(),
        config.parallelism,
    )?;
    let mut results = Vec::new();
    let mut labels = Vec::new();
    let mut events = String::new();
    for (st, run) in env.statements().iter().zip(runs) {
        let run = run.map_err(|e| CliError::Input(format!("`{}`: {e}", st.id)))?;
        labels.extend(label_prm_nodes(&run.tree));
        events.push_str(&run.events.to_jsonl());
        results.push(run.result);
    }
    write(&config.out, "results.csv", &results_csv(&results))?;
    write(&config.out, "prm_labels.tsv", &write_prm_labels(&labels))?;
    write(&config.out, "events.jsonl", &events)?;
    let proved = results.iter().filter(|r| r.proved).count();
    println!("proved={proved}/{}", results.len());
    Ok(Status::Success)
}

fn cmd_iterate(config: &RunConfig, iterations: usize, resume: bool) -> Result<Status, CliError> {
    let env = load_environment(config)?;
    let policy = build_policy(&config.policy)?;
    let critic = build_critic(&config.critic)?;
    let campaign_config = campaign_config_checked(config)?;
    let checkpoint_path = config.out.join("checkpoint.json");
    let mut campaign = if resume {
        Campaign::resume(
            Checkpoint::load(&checkpoint_path)?,
            critic,
            &campaign_config,
        )?
    } else {
        Campaign::start(env.statements().to_vec(), critic, &campaign_config)?
    };
    fs::create_dir_all(&config.out).map_err(|e| CliError::io(&config.out, e))?;
    if !resume {
        campaign.checkpoint.save(&checkpoint_path)?;
    }
    while campaign.state().iteration_t < iterations {
        let out = campaign.step(&env, policy.as_ref(), &campaign_config)?;
        let t = out.state.iteration_t;
        let records = config.out.join("records");
        write(
            &records,
            &format!("policy-{t}.jsonl"),
            &records_to_jsonl(&out.policy_records),
        )?;
        if !out.distance_records.is_empty() {
            write(
                &records,
                &format!("distance-{t}.jsonl"),
                &records_to_jsonl(&out.distance_records),
            )?;
        }
        let mut events = String::new();
        for r in &out.runs {
            events.push_str(&r.events.to_jsonl());
        }
        write(
            &config.out.join("events"),
            &format!("iteration-{t}.jsonl"),
            &events,
        )?;
        campaign.checkpoint.save(&checkpoint_path)?;
        write(&config.out, "stats.csv", &stats_csv(campaign.stats()))?;
    }
    let csv = stats_csv(campaign.stats());
    write(&config.out, "stats.csv", &csv)?;
    // Final record sets, regenerated from the state.
    let filter = &campaign_config.filter;
    write(
        &config.out,
        "policy_records.jsonl",
        &records_to_jsonl(&emit_policy_records(campaign.state(), filter)),
    )?;
    let distance = emit_distance_records(campaign.state(), filter, config.iterate.levels)
        .map_err(|e| CliError::Config(e.to_string()))?;
    write(
        &config.out,
        "distance_records.jsonl",
        &records_to_jsonl(&distance),
    )?;
    print!("{csv}");
    Ok(Status::Success)
}

fn campaign_config_checked(
    config: &RunConfig,
) -> Result<prover_search::datagen::CampaignConfig, CliError> {
    let c = config.campaign_config();
    if !(c.smoothing.is_finite() && c.smoothing >= 0.0) {
        return Err(CliError::Config(
            "iterate.smoothing must be nonnegative".into(),
        ));
    }
    Ok(c)
}

fn cmd_gen_puzzles(config: &RunConfig, args: &GenPuzzles) -> Result<Status, CliError> {
    let base = match &config.environment {
        Some(EnvironmentSpec::Puzzles(p)) => p.clone(),
        _ => PuzzleFamilyConfig {
            seed: config.seed,
            num_statements: 50,
            state_space_size: 400,
            branching: 4,
            solvable_fraction: 0.8,
            max_depth: 6,
        },
    };
    let family = PuzzleFamilyConfig {
        seed: config.seed,
        num_statements: args.statements.unwrap_or(base.num_statements),
        state_space_size: args.states.unwrap_or(base.state_space_size),
        branching: args.branching.unwrap_or(base.branching),
        solvable_fraction: args.solvable_fraction.unwrap_or(base.solvable_fraction),
        max_depth: args.max_depth.unwrap_or(base.max_depth),
    };
    let env = generate_puzzles(&family).map_err(|e| CliError::Config(e.to_string()))?;
    let path = write(&config.out, "puzzles.tsv", &env.to_tsv())?;
    let solvable = env
        .statements()
        .iter()
        .filter(|s| oracle_solve(&env, s).is_some())
        .count();
    println!(
        "wrote {} statements={} solvable={solvable} transitions={}",
        path.display(),
        env.statements().len(),
        env.transition_count()
    );
    Ok(Status::Success)
}
