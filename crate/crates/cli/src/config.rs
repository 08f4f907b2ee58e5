//! The run configuration document.
//!
//! Every section is optional except where a command needs it; omitted
//! search parameters take the defaults of the library (`K = 8`,
//! temperatures `0.7/0.8/1.0/1.1` twice each, 800 steps, 3600 s / 60 s).

use std::fs;
use std::path::{Path, PathBuf};

use prover_search::datagen::{CampaignConfig, CriticRefit, DiversityConfig, FilterConfig};
use prover_search::env::PuzzleFamilyConfig;
use prover_search::policy::Endpoint;
use prover_search::search::SearchConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub parallelism: usize,
    pub environment: Option<EnvironmentSpec>,
    pub policy: PolicySpec,
    pub critic: CriticSpec,
    pub search: SearchConfig,
    pub filter: FilterConfig,
    pub iterate: IterateSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            parallelism: 1,
            environment: None,
            policy: PolicySpec::Uniform {},
            critic: CriticSpec::Pc {},
            search: SearchConfig::default(),
            filter: FilterConfig::default(),
            iterate: IterateSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum EnvironmentSpec {
    /// A transition-table file.
    Scripted { path: PathBuf },
    /// A generated puzzle family.
    Puzzles(PuzzleFamilyConfig),
}

fn default_smoothing() -> f64 {
    1.0
}

fn default_timeout_seconds() -> f64 {
    60.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    /// Tabular policy with no data: uniform over the environment's tactics.
    Uniform {},
    /// Proposes every available tactic once.
    Enumerate {},
    /// Tabular policy fitted on a policy-record file.
    Tabular {
        records: PathBuf,
        #[serde(default = "default_smoothing")]
        smoothing: f64,
    },
    /// A server speaking the line-delimited JSON protocol.
    External {
        endpoint: Endpoint,
        #[serde(default = "default_timeout_seconds")]
        timeout_seconds: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CriticSpec {
    Pc {},
    /// Tabular PRM fitted on a label file.
    Prm {
        labels: PathBuf,
    },
    /// Distance table fitted on a distance-record file.
    Distance {
        records: PathBuf,
        #[serde(default)]
        levels: Option<u32>,
    },
}

impl Default for PolicySpec {
    fn default() -> Self {
        PolicySpec::Uniform {}
    }
}

impl Default for CriticSpec {
    fn default() -> Self {
        CriticSpec::Pc {}
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterateSpec {
    pub smoothing: f64,
    pub diversity_per_tree: usize,
    /// Refit a distance critic between iterations.
    pub refit_distance_critic: bool,
    pub levels: u32,
}

impl Default for IterateSpec {
    fn default() -> Self {
        IterateSpec {
            smoothing: 1.0,
            diversity_per_tree: 0,
            refit_distance_critic: false,
            levels: 6,
        }
    }
}

impl RunConfig {
    /// Reads a TOML document; relative paths inside it are taken relative
    /// to the document's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.rebase(base);
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out);
        if let Some(EnvironmentSpec::Scripted { path }) = &mut self.environment {
            fix(path);
        }
        match &mut self.policy {
            PolicySpec::Tabular { records, .. } => fix(records),
            PolicySpec::Uniform {} | PolicySpec::Enumerate {} | PolicySpec::External { .. } => {}
        }
        match &mut self.critic {
            CriticSpec::Prm { labels } => fix(labels),
            CriticSpec::Distance { records, .. } => fix(records),
            CriticSpec::Pc {} => {}
        }
    }

    /// The search configuration with the run seed applied.
    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            seed: self.seed,
            ..self.search.clone()
        }
    }

    pub fn campaign_config(&self) -> CampaignConfig {
        CampaignConfig {
            search: self.search_config(),
            filter: self.filter.clone(),
            diversity: DiversityConfig {
                per_tree: self.iterate.diversity_per_tree,
            },
            smoothing: self.iterate.smoothing,
            critic_refit: if self.iterate.refit_distance_critic {
                CriticRefit::Distance {
                    levels: self.iterate.levels,
                }
            } else {
                CriticRefit::Keep
            },
            parallelism: self.parallelism,
        }
    }
}
