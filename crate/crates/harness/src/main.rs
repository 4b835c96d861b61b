use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use shared_mac::activation::{to_pmf_string, ScenarioKind, ScenarioSpec};
use shared_mac::bandit::train;
use shared_mac::cluster::{diana_partition_with, greedy_assign};
use shared_mac::exact::brute_force_optimal_with;
use shared_mac::model::expected_success_deterministic;
use shared_mac_harness::config::{
    ClusterSection, ConfigFile, ExactSection, MabSection, RuleName, RunSection, ScenarioSection,
};
use shared_mac_harness::experiment::{format_codes, load_scenario};
use shared_mac_harness::{compare_optima, run_experiment, ScenarioSource, Solver};

#[derive(Parser)]
#[command(
    name = "shared-mac",
    version,
    about = "Medium access for a shared message: scenarios, solvers and experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a scenario PMF file.
    GenScenario {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one scenario with the exact, clustering or greedy solver.
    Solve {
        #[arg(long, value_enum, default_value = "exact")]
        solver: Solver,
        #[arg(long, default_value_t = 2)]
        channels: usize,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        exact: ExactArgs,
        #[command(flatten)]
        cluster: ClusterArgs,
    },
    /// Train the bandit sensors on one scenario.
    Train {
        #[arg(long, default_value_t = 2)]
        channels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        mab: MabArgs,
        /// Write the training curve CSV here.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Run a full experiment from a config file and/or flags.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        mab: MabArgs,
        #[command(flatten)]
        exact: ExactArgs,
        #[command(flatten)]
        cluster: ClusterArgs,
    },
    /// Compare the brute-force optima of two set sizes of one scenario family.
    Compare {
        #[arg(long, default_value = "regular")]
        kind: String,
        #[arg(long, default_value_t = 10)]
        sensors: usize,
        #[arg(long, default_value_t = 2)]
        first_set_size: usize,
        #[arg(long, default_value_t = 3)]
        second_set_size: usize,
        #[arg(long, default_value_t = 0)]
        scenario_seed: u64,
        #[arg(long, default_value_t = 2)]
        channels: usize,
        #[command(flatten)]
        exact: ExactArgs,
    },
}

#[derive(Args, Default)]
struct ScenarioArgs {
    /// deterministic, regular or general.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    sensors: Option<usize>,
    #[arg(long)]
    set_size: Option<usize>,
    /// Seed of the general scenario's random weights.
    #[arg(long)]
    scenario_seed: Option<u64>,
    /// Read the PMF from a file instead of building a scenario.
    #[arg(long, conflicts_with = "kind")]
    pmf: Option<PathBuf>,
    /// Accept a PMF file whose probabilities do not sum to 1.
    #[arg(long)]
    renormalize: bool,
}

impl ScenarioArgs {
    fn apply(&self, s: &mut ScenarioSection) {
        if self.kind.is_some() || self.pmf.is_some() {
            s.kind = self.kind.clone();
            s.pmf_file = self.pmf.clone();
        }
        s.n_sensors = self.sensors.or(s.n_sensors);
        s.set_size = self.set_size.or(s.set_size);
        s.seed = self.scenario_seed.unwrap_or(s.seed);
        s.renormalize |= self.renormalize;
    }

    fn source(&self) -> anyhow::Result<ScenarioSource> {
        let mut s = ScenarioSection::default();
        self.apply(&mut s);
        Ok(s.to_source()?)
    }
}

#[derive(Args, Default)]
struct RunArgs {
    #[arg(long)]
    channels: Option<usize>,
    /// Comma-separated subset of exact,cluster,greedy,mab.
    #[arg(long, value_enum, value_delimiter = ',')]
    solvers: Option<Vec<Solver>>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Emit curves.svg (true or false).
    #[arg(long)]
    svg: Option<bool>,
}

impl RunArgs {
    fn apply(&self, r: &mut RunSection) {
        r.channels = self.channels.unwrap_or(r.channels);
        if let Some(s) = &self.solvers {
            r.solvers = s.clone();
        }
        r.replications = self.replications.unwrap_or(r.replications);
        r.seed = self.seed.unwrap_or(r.seed);
        if self.output_dir.is_some() {
            r.output_dir = self.output_dir.clone();
        }
        r.svg = self.svg.unwrap_or(r.svg);
    }
}

#[derive(Args, Default)]
struct MabArgs {
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Evaluations without a profile change before stopping; 0 never stops.
    #[arg(long)]
    patience: Option<u64>,
    #[arg(long)]
    eval_period: Option<u64>,
    #[arg(long)]
    ack_loss_prob: Option<f64>,
    /// Learning-rate exponent in (0.5, 1].
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    reward_window: Option<usize>,
}

impl MabArgs {
    fn apply(&self, m: &mut MabSection) {
        m.max_rounds = self.max_rounds.unwrap_or(m.max_rounds);
        m.patience = self.patience.unwrap_or(m.patience);
        m.eval_period = self.eval_period.unwrap_or(m.eval_period);
        m.ack_loss_prob = self.ack_loss_prob.unwrap_or(m.ack_loss_prob);
        m.beta = self.beta.unwrap_or(m.beta);
        m.reward_window = self.reward_window.unwrap_or(m.reward_window);
    }
}

#[derive(Args, Default)]
struct ExactArgs {
    #[arg(long)]
    max_strategies: Option<u64>,
    /// Search every move of sensor 0 instead of one per channel relabeling.
    #[arg(long)]
    no_pruning: bool,
}

impl ExactArgs {
    fn apply(&self, e: &mut ExactSection) {
        e.max_strategies = self.max_strategies.unwrap_or(e.max_strategies);
        e.symmetry_pruning &= !self.no_pruning;
    }
}

#[derive(Args, Default)]
struct ClusterArgs {
    /// Cluster count; defaults to 2^channels.
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long, value_enum)]
    rule: Option<RuleName>,
}

impl ClusterArgs {
    fn apply(&self, c: &mut ClusterSection) {
        c.clusters = self.clusters.or(c.clusters);
        c.rule = self.rule.unwrap_or(c.rule);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenScenario { scenario, out } => {
            let pmf = load_scenario(&scenario.source()?)?;
            let text = to_pmf_string(&pmf);
            match out {
                Some(path) => std::fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
        }
        Command::Solve {
            solver,
            channels,
            scenario,
            exact,
            cluster,
        } => {
            let pmf = load_scenario(&scenario.source()?)?;
            let strategy = match solver {
                Solver::Exact => {
                    let mut e = ExactSection::default();
                    exact.apply(&mut e);
                    let sol = brute_force_optimal_with(&pmf, channels, &(&e).into())?;
                    println!("evaluated: {}", sol.evaluated);
                    sol.strategy
                }
                Solver::Cluster => {
                    let mut c = ClusterSection::default();
                    cluster.apply(&mut c);
                    let k = c.clusters.unwrap_or(1 << channels.min(16));
                    let clustering = diana_partition_with(&pmf, k, channels, c.rule.into())?;
                    for (moves, members) in clustering.moves().iter().zip(clustering.clusters()) {
                        println!("cluster {moves}: {members:?}");
                    }
                    clustering.strategy()
                }
                Solver::Greedy => greedy_assign(&pmf, channels)?,
                Solver::Mab => anyhow::bail!("use the train subcommand for the bandit solver"),
            };
            println!("strategy: {strategy}");
            println!("codes: {}", format_codes(&strategy));
            println!(
                "value: {:?}",
                expected_success_deterministic(&strategy, &pmf)?
            );
        }
        Command::Train {
            channels,
            seed,
            scenario,
            mab,
            curve,
        } => {
            let pmf = load_scenario(&scenario.source()?)?;
            let mut m = MabSection::default();
            mab.apply(&mut m);
            let out = train(&pmf, channels, &(&m).into(), seed)?;
            if let Some(path) = curve {
                std::fs::write(&path, out.curve.to_csv())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            println!("rounds: {}", out.rounds);
            println!("converged: {}", out.converged);
            println!("strategy: {}", out.strategy);
            println!("codes: {}", format_codes(&out.strategy));
            println!("value: {:?}", out.value);
        }
        Command::Run {
            config,
            scenario,
            run,
            mab,
            exact,
            cluster,
        } => {
            let mut file = match &config {
                Some(path) => ConfigFile::load(path)?,
                None => ConfigFile::default(),
            };
            scenario.apply(&mut file.scenario);
            run.apply(&mut file.run);
            mab.apply(&mut file.mab);
            exact.apply(&mut file.exact);
            cluster.apply(&mut file.cluster);
            let cfg = file.to_experiment()?;
            let report = run_experiment(&cfg)?;
            println!("solver,runs,mean,min,max,gap_mean");
            for row in &report.summary {
                println!(
                    "{},{},{:.6},{:.6},{:.6},{}",
                    row.solver,
                    row.runs,
                    row.mean,
                    row.min,
                    row.max,
                    row.gaps.map(|g| format!("{:.6}", g.0)).unwrap_or_default()
                );
            }
            println!(
                "wrote {} file(s) to {}",
                report.files.len(),
                cfg.output_dir.display()
            );
        }
        Command::Compare {
            kind,
            sensors,
            first_set_size,
            second_set_size,
            scenario_seed,
            channels,
            exact,
        } => {
            let kind: ScenarioKind = kind.parse()?;
            let spec = |a| ScenarioSpec {
                kind,
                n_sensors: sensors,
                set_size: a,
                seed: scenario_seed,
            };
            let mut e = ExactSection::default();
            exact.apply(&mut e);
            let cmp = compare_optima(
                &spec(first_set_size).build()?,
                &spec(second_set_size).build()?,
                channels,
                &(&e).into(),
            )?;
            println!("A={first_set_size}: {:?}", cmp.first);
            println!("A={second_set_size}: {:?}", cmp.second);
            let order = if cmp.second > cmp.first {
                ">"
            } else if cmp.second < cmp.first {
                "<"
            } else {
                "="
            };
            println!("optimum(A={second_set_size}) {order} optimum(A={first_set_size})");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
