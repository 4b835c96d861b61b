//! Experiment configuration and its TOML file form.
//!
//! ```toml
//! [scenario]
//! kind = "regular"        # deterministic | regular | general
//! n_sensors = 10
//! set_size = 2
//! seed = 0                # general only
//! # pmf_file = "x.pmf"    # instead of kind; relative to this file
//!
//! [run]
//! channels = 2
//! solvers = ["exact", "cluster", "greedy", "mab"]
//! replications = 3
//! seed = 7
//! output_dir = "out"
//! svg = true
//!
//! [mab]
//! max_rounds = 5000
//! patience = 1000
//! eval_period = 1
//! ack_loss_prob = 0.0
//! beta = 1.0
//! reward_window = 100
//!
//! [exact]
//! max_strategies = 4294967296
//! symmetry_pruning = true
//!
//! [cluster]
//! clusters = 4            # default 2^channels
//! rule = "average"        # average | total
//! ```
//!
//! Every key is optional except the scenario and `run.output_dir`.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use shared_mac::activation::{ScenarioKind, ScenarioSpec};
use shared_mac::bandit::TrainingConfig;
use shared_mac::cluster::SplitRule;
use shared_mac::exact::{BruteForceOptions, DEFAULT_MAX_STRATEGIES};
use shared_mac::model::MAX_CHANNELS;

use crate::error::{io_err, HarnessError, Result};

#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    PartialOrd,
    Ord,
    Hash,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Exact,
    Cluster,
    Greedy,
    Mab,
}

impl Solver {
    pub const ALL: [Solver; 4] = [Solver::Exact, Solver::Cluster, Solver::Greedy, Solver::Mab];

    pub fn name(self) -> &'static str {
        match self {
            Solver::Exact => "exact",
            Solver::Cluster => "cluster",
            Solver::Greedy => "greedy",
            Solver::Mab => "mab",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSource {
    Spec(ScenarioSpec),
    File { path: PathBuf, renormalize: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSource,
    pub channels: usize,
    pub solvers: BTreeSet<Solver>,
    pub mab: TrainingConfig,
    pub exact: BruteForceOptions,
    /// Cluster count for the clustering solver; `2^channels` when unset.
    pub clusters: Option<usize>,
    pub split_rule: SplitRule,
    pub replications: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub svg: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.channels > MAX_CHANNELS {
            return Err(HarnessError::Config(format!(
                "channels must lie in 1..={MAX_CHANNELS}, got {}",
                self.channels
            )));
        }
        if self.replications == 0 {
            return Err(HarnessError::Config(
                "replications must be at least 1".into(),
            ));
        }
        if self.solvers.is_empty() {
            return Err(HarnessError::Config("no solver selected".into()));
        }
        if self.clusters == Some(0) {
            return Err(HarnessError::Config("clusters must be at least 1".into()));
        }
        self.mab.validate()?;
        if let ScenarioSource::Spec(spec) = &self.scenario {
            spec.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub kind: Option<String>,
    pub n_sensors: Option<usize>,
    pub set_size: Option<usize>,
    pub seed: u64,
    pub pmf_file: Option<PathBuf>,
    pub renormalize: bool,
}

impl ScenarioSection {
    pub fn to_source(&self) -> Result<ScenarioSource> {
        match (&self.kind, &self.pmf_file) {
            (Some(_), Some(_)) => Err(HarnessError::Config(
                "scenario takes either kind or pmf_file, not both".into(),
            )),
            (None, None) => Err(HarnessError::Config(
                "scenario needs kind or pmf_file".into(),
            )),
            (None, Some(path)) => Ok(ScenarioSource::File {
                path: path.clone(),
                renormalize: self.renormalize,
            }),
            (Some(kind), None) => {
                let missing = |k: &str| HarnessError::Config(format!("scenario.{k} is required"));
                Ok(ScenarioSource::Spec(ScenarioSpec {
                    kind: ScenarioKind::from_str(kind)?,
                    n_sensors: self.n_sensors.ok_or_else(|| missing("n_sensors"))?,
                    set_size: self.set_size.ok_or_else(|| missing("set_size"))?,
                    seed: self.seed,
                }))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub channels: usize,
    pub solvers: Vec<Solver>,
    pub replications: usize,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub svg: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            channels: 2,
            solvers: Solver::ALL.to_vec(),
            replications: 1,
            seed: 0,
            output_dir: None,
            svg: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MabSection {
    pub max_rounds: u64,
    pub patience: u64,
    pub eval_period: u64,
    pub ack_loss_prob: f64,
    pub beta: f64,
    pub reward_window: usize,
}

impl Default for MabSection {
    fn default() -> Self {
        let d = TrainingConfig::default();
        Self {
            max_rounds: d.max_rounds,
            patience: d.patience,
            eval_period: d.eval_period,
            ack_loss_prob: d.ack_loss_prob,
            beta: d.alpha_exponent,
            reward_window: d.reward_window,
        }
    }
}

impl From<&MabSection> for TrainingConfig {
    fn from(m: &MabSection) -> Self {
        TrainingConfig {
            ack_loss_prob: m.ack_loss_prob,
            alpha_exponent: m.beta,
            eval_period: m.eval_period,
            max_rounds: m.max_rounds,
            patience: m.patience,
            reward_window: m.reward_window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactSection {
    pub max_strategies: u64,
    pub symmetry_pruning: bool,
}

impl Default for ExactSection {
    fn default() -> Self {
        Self {
            max_strategies: DEFAULT_MAX_STRATEGIES,
            symmetry_pruning: true,
        }
    }
}

impl From<&ExactSection> for BruteForceOptions {
    fn from(e: &ExactSection) -> Self {
        BruteForceOptions {
            max_strategies: e.max_strategies,
            symmetry_pruning: e.symmetry_pruning,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RuleName {
    #[default]
    Average,
    Total,
}

impl From<RuleName> for SplitRule {
    fn from(r: RuleName) -> Self {
        match r {
            RuleName::Average => SplitRule::AverageCost,
            RuleName::Total => SplitRule::TotalCost,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSection {
    pub clusters: Option<usize>,
    pub rule: RuleName,
}

/// The file form of [`ExperimentConfig`]; every field can be overridden
/// before conversion.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: ScenarioSection,
    pub run: RunSection,
    pub mab: MabSection,
    pub exact: ExactSection,
    pub cluster: ClusterSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads a file and resolves its relative paths against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(p) = p.as_mut().filter(|p| p.is_relative()) {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.scenario.pmf_file);
        rebase(&mut cfg.run.output_dir);
        Ok(cfg)
    }

    pub fn to_experiment(&self) -> Result<ExperimentConfig> {
        let scenario = self.scenario.to_source()?;
        let cfg = ExperimentConfig {
            scenario,
            channels: self.run.channels,
            solvers: self.run.solvers.iter().copied().collect(),
            mab: (&self.mab).into(),
            exact: (&self.exact).into(),
            clusters: self.cluster.clusters,
            split_rule: self.cluster.rule.into(),
            replications: self.run.replications,
            seed: self.run.seed,
            output_dir: self
                .run
                .output_dir
                .clone()
                .ok_or_else(|| HarnessError::Config("run.output_dir is required".into()))?,
            svg: self.run.svg,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
