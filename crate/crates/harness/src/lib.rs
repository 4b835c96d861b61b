//! Experiment runner for the shared-message access problem: builds a
//! scenario, runs the exact, clustering, greedy and bandit solvers on it and
//! writes CSV reports, training curves and an SVG chart.

pub mod config;
mod error;
pub mod experiment;
pub mod svg;

pub use config::{ConfigFile, ExperimentConfig, ScenarioSource, Solver};
pub use error::{HarnessError, Result};
pub use experiment::{compare_optima, run_experiment, ExperimentReport, OptimaComparison};
