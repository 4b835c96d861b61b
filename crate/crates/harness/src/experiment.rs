//! Runs the selected solvers on one scenario and writes the report files.
//!
//! Output directory layout:
//!
//! - `scenario.pmf`: the activation PMF
//! - `results.csv`: `solver,replication,value,rounds,strategy`
//! - `mab_curve_rep{r}.csv`: one training curve per replication
//! - `summary.csv`: `solver,runs,mean,min,max,gap_mean,gap_min,gap_max`
//! - `curves.svg`: success against training round (optional)
//! - `timings.csv`: `solver,replication,seconds`
//!
//! Everything except `timings.csv` is a function of the config alone.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use shared_mac::activation::{parse_pmf, to_pmf_string, ParseOptions};
use shared_mac::bandit::{train, TrainingCurve};
use shared_mac::cluster::{diana_partition_with, greedy_assign};
use shared_mac::exact::{brute_force_optimal_with, BruteForceOptions};
use shared_mac::model::{expected_success_deterministic, ActivationPmf, DeterministicStrategy};
use shared_mac::rng::derive_seed;

use crate::config::{ExperimentConfig, ScenarioSource, Solver};
use crate::error::{io_err, HarnessError, Result};
use crate::svg::{line_chart, Series};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverRun {
    pub solver: Solver,
    pub replication: usize,
    pub strategy: DeterministicStrategy,
    pub value: f64,
    /// Training rounds played, MAB only.
    pub rounds: Option<u64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub solver: Solver,
    pub runs: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// `exact - value` statistics, when the exact solver ran.
    pub gaps: Option<(f64, f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub pmf: ActivationPmf,
    pub runs: Vec<SolverRun>,
    pub curves: Vec<TrainingCurve>,
    pub summary: Vec<SummaryRow>,
    pub files: Vec<PathBuf>,
}

impl ExperimentReport {
    pub fn row(&self, solver: Solver) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.solver == solver)
    }
}

pub fn load_scenario(source: &ScenarioSource) -> Result<ActivationPmf> {
    match source {
        ScenarioSource::Spec(spec) => Ok(spec.build()?),
        ScenarioSource::File { path, renormalize } => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            Ok(parse_pmf(
                &text,
                ParseOptions {
                    renormalize: *renormalize,
                },
            )?)
        }
    }
}

/// Move codes separated by single spaces, sensor 0 first.
pub fn format_codes(strategy: &DeterministicStrategy) -> String {
    strategy
        .codes()
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn parse_codes(text: &str, channels: usize) -> Result<DeterministicStrategy> {
    let codes = text
        .split_whitespace()
        .map(|c| {
            c.parse::<u32>()
                .map_err(|e| HarnessError::Config(format!("bad move code {c:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DeterministicStrategy::from_codes(&codes, channels)?)
}

fn write_file(path: &Path, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(path, contents).map_err(io_err(path))?;
    files.push(path.to_path_buf());
    Ok(())
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

fn single_run(
    solver: Solver,
    strategy: DeterministicStrategy,
    pmf: &ActivationPmf,
    seconds: f64,
) -> Result<SolverRun> {
    let value = expected_success_deterministic(&strategy, pmf)?;
    Ok(SolverRun {
        solver,
        replication: 0,
        strategy,
        value,
        rounds: None,
        seconds,
    })
}

/// Average of the replication curves on the longest curve's rounds; a
/// curve that stopped early keeps its last value.
pub fn average_curve(curves: &[TrainingCurve]) -> Vec<(f64, f64)> {
    let Some(longest) = curves.iter().max_by_key(|c| c.points.len()) else {
        return Vec::new();
    };
    longest
        .points
        .iter()
        .map(|p| {
            let total: f64 = curves
                .iter()
                .map(|c| {
                    c.points
                        .iter()
                        .take_while(|q| q.round <= p.round)
                        .last()
                        .map_or(0.0, |q| q.exact_success)
                })
                .sum();
            (p.round as f64, total / curves.len() as f64)
        })
        .collect()
}

fn summarize(runs: &[SolverRun], exact: Option<f64>) -> Vec<SummaryRow> {
    Solver::ALL
        .iter()
        .filter_map(|&solver| {
            let values: Vec<f64> = runs
                .iter()
                .filter(|r| r.solver == solver)
                .map(|r| r.value)
                .collect();
            if values.is_empty() {
                return None;
            }
            let stats = |v: &[f64]| {
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                let min = v.iter().copied().fold(f64::INFINITY, f64::min);
                let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (mean, min, max)
            };
            let (mean, min, max) = stats(&values);
            let gaps = exact.map(|e| stats(&values.iter().map(|v| e - v).collect::<Vec<_>>()));
            Some(SummaryRow {
                solver,
                runs: values.len(),
                mean,
                min,
                max,
                gaps,
            })
        })
        .collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let pmf = load_scenario(&cfg.scenario)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = Vec::new();
    write_file(&dir.join("scenario.pmf"), &to_pmf_string(&pmf), &mut files)?;

    let channels = cfg.channels;
    let mut runs = Vec::new();
    let mut exact_value = None;
    for &solver in &cfg.solvers {
        match solver {
            Solver::Exact => {
                let (res, secs) = timed(|| brute_force_optimal_with(&pmf, channels, &cfg.exact));
                match res {
                    Ok(sol) => {
                        info!(
                            "exact optimum {:?} ({} strategies)",
                            sol.value, sol.evaluated
                        );
                        exact_value = Some(sol.value);
                        runs.push(single_run(solver, sol.strategy, &pmf, secs)?);
                    }
                    Err(e @ shared_mac::Error::InstanceTooLarge { .. }) => {
                        warn!("skipping exact solver: {e}");
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            Solver::Cluster => {
                if !pmf.is_pairwise() {
                    warn!("skipping cluster solver: it needs every active set to have two members");
                    continue;
                }
                let k = cfg.clusters.unwrap_or(1 << channels);
                let (res, secs) = timed(|| diana_partition_with(&pmf, k, channels, cfg.split_rule));
                runs.push(single_run(solver, res?.strategy(), &pmf, secs)?);
            }
            Solver::Greedy => {
                let (res, secs) = timed(|| greedy_assign(&pmf, channels));
                runs.push(single_run(solver, res?, &pmf, secs)?);
            }
            Solver::Mab => {}
        }
    }

    let mut curves = Vec::new();
    if cfg.solvers.contains(&Solver::Mab) {
        let outcomes = (0..cfg.replications)
            .into_par_iter()
            .map(|r| {
                let (res, secs) =
                    timed(|| train(&pmf, channels, &cfg.mab, derive_seed(cfg.seed, r as u64)));
                res.map(|o| (o, secs))
            })
            .collect::<shared_mac::Result<Vec<_>>>()?;
        for (r, (out, secs)) in outcomes.into_iter().enumerate() {
            write_file(
                &dir.join(format!("mab_curve_rep{r}.csv")),
                &out.curve.to_csv(),
                &mut files,
            )?;
            runs.push(SolverRun {
                solver: Solver::Mab,
                replication: r,
                strategy: out.strategy,
                value: out.value,
                rounds: Some(out.rounds),
                seconds: secs,
            });
            curves.push(out.curve);
        }
    }

    let path = dir.join("results.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["solver", "replication", "value", "rounds", "strategy"])?;
    for r in &runs {
        w.write_record([
            r.solver.name().to_string(),
            r.replication.to_string(),
            format!("{:?}", r.value),
            r.rounds.map(|n| n.to_string()).unwrap_or_default(),
            format_codes(&r.strategy),
        ])?;
    }
    w.flush().map_err(io_err(&path))?;
    files.push(path);

    let summary = summarize(&runs, exact_value);
    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "solver", "runs", "mean", "min", "max", "gap_mean", "gap_min", "gap_max",
    ])?;
    for row in &summary {
        let mut rec = vec![
            row.solver.name().to_string(),
            row.runs.to_string(),
            format!("{:?}", row.mean),
            format!("{:?}", row.min),
            format!("{:?}", row.max),
        ];
        match row.gaps {
            Some((m, lo, hi)) => rec.extend([m, lo, hi].map(|g| format!("{g:?}"))),
            None => rec.extend(std::iter::repeat_n(String::new(), 3)),
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(&path))?;
    files.push(path);

    if cfg.svg {
        let mab = average_curve(&curves);
        let last_round = mab.last().map_or(1.0, |p| p.0);
        let mut series = Vec::new();
        for row in summary.iter().filter(|r| r.solver != Solver::Mab) {
            series.push(Series {
                label: format!("{} ({:.3})", row.solver, row.mean),
                points: vec![(0.0, row.mean), (last_round, row.mean)],
            });
        }
        if !mab.is_empty() {
            series.push(Series {
                label: format!("mab, mean of {}", curves.len()),
                points: mab,
            });
        }
        let svg = line_chart(
            "Success probability",
            "training round",
            "success",
            &series,
            0.0,
        );
        write_file(&dir.join("curves.svg"), &svg, &mut files)?;
    }

    // wall times change between runs, so they stay out of the files above
    let path = dir.join("timings.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["solver", "replication", "seconds"])?;
    for r in &runs {
        w.write_record([
            r.solver.name().to_string(),
            r.replication.to_string(),
            format!("{:.6}", r.seconds),
        ])?;
    }
    w.flush().map_err(io_err(&path))?;
    files.push(path);

    Ok(ExperimentReport {
        pmf,
        runs,
        curves,
        summary,
        files,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimaComparison {
    pub first: f64,
    pub second: f64,
}

impl OptimaComparison {
    pub fn second_is_higher(&self) -> bool {
        self.second > self.first
    }
}

/// Brute-force optima of two scenarios on the same channel count.
pub fn compare_optima(
    first: &ActivationPmf,
    second: &ActivationPmf,
    channels: usize,
    opts: &BruteForceOptions,
) -> Result<OptimaComparison> {
    Ok(OptimaComparison {
        first: brute_force_optimal_with(first, channels, opts)?.value,
        second: brute_force_optimal_with(second, channels, opts)?.value,
    })
}
