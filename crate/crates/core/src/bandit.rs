//! Distributed bandit learning with round-robin exploration.
//!
//! Each sensor runs its own bandit over the `2^M` moves and learns only from
//! the shared acknowledgment bit (1 iff the slot succeeded). Training is
//! organized in turns: one designated sensor per turn, chosen round-robin.
//! If the designated sensor is active it plays a uniformly random move,
//! every other active sensor plays its greedy move, and only the designated
//! sensor updates its table. A round is `N` turns, so every sensor is
//! designated once per round.
//!
//! Updates use `Q <- (1 - a) Q + a * reward` with `a = k^(-beta)`, where `k`
//! counts the visits of that arm. With `beta = 1` the value of a visited arm
//! is exactly the running mean of its rewards.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::Rng;

use crate::activation::ActiveSetSampler;
use crate::error::{Error, Result};
use crate::model::eval::value_of_codes;
use crate::model::{
    check_channels, move_count, success_codes, ActivationPmf, ActiveSet, DeterministicStrategy,
};
use crate::rng::{rng_from_seed, SimRng};

/// Step size `k^(-exponent)` for the `k`-th visit of an arm.
///
/// Exponents in `(0.5, 1]` give `sum a = inf` and `sum a^2 < inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningSchedule {
    exponent: f64,
}

impl LearningSchedule {
    pub fn new(exponent: f64) -> Result<Self> {
        if !(exponent > 0.5 && exponent <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "learning-rate exponent must lie in (0.5, 1], got {exponent}"
            )));
        }
        Ok(Self { exponent })
    }

    /// `a = 1/k`: per-arm sample averaging.
    pub fn sample_average() -> Self {
        Self { exponent: 1.0 }
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn rate(&self, visits: u64) -> f64 {
        if self.exponent == 1.0 {
            1.0 / visits as f64
        } else {
            (visits as f64).powf(-self.exponent)
        }
    }
}

impl Default for LearningSchedule {
    fn default() -> Self {
        Self::sample_average()
    }
}

/// One sensor's value estimates and visit counts, indexed by move code.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: Vec<f64>,
    visits: Vec<u64>,
}

impl QTable {
    pub fn new(values: Vec<f64>) -> Self {
        let visits = vec![0; values.len()];
        Self { values, visits }
    }

    /// Values drawn i.i.d. uniform on `[0, 1)`.
    pub fn random<R: Rng + ?Sized>(arms: usize, rng: &mut R) -> Self {
        Self::new((0..arms).map(|_| rng.random::<f64>()).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn visits(&self) -> &[u64] {
        &self.visits
    }

    pub fn arms(&self) -> usize {
        self.values.len()
    }

    /// Records one reward for `arm` and returns its new value.
    pub fn update(&mut self, arm: usize, reward: bool, schedule: &LearningSchedule) -> Result<f64> {
        let arms = self.arms();
        let (q, k) = self
            .values
            .get_mut(arm)
            .zip(self.visits.get_mut(arm))
            .ok_or(Error::ArmOutOfRange { arm, arms })?;
        *k += 1;
        let alpha = schedule.rate(*k);
        *q = (1.0 - alpha) * *q + alpha * f64::from(u8::from(reward));
        Ok(*q)
    }

    /// Highest-valued arm, smallest code on ties.
    pub fn greedy_move(&self) -> u32 {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingConfig {
    /// Probability that a success is observed as a failure.
    pub ack_loss_prob: f64,
    pub alpha_exponent: f64,
    /// Rounds between evaluations of the greedy profile.
    pub eval_period: u64,
    pub max_rounds: u64,
    /// Stop once the greedy profile is unchanged over this many consecutive
    /// evaluations. Zero disables early stopping.
    pub patience: u64,
    /// Turns covered by the empirical reward average.
    pub reward_window: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            ack_loss_prob: 0.0,
            alpha_exponent: 1.0,
            eval_period: 1,
            max_rounds: 5000,
            patience: 1000,
            reward_window: 100,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ack_loss_prob) {
            return Err(Error::InvalidConfig(format!(
                "ack_loss_prob must lie in [0, 1], got {}",
                self.ack_loss_prob
            )));
        }
        LearningSchedule::new(self.alpha_exponent)?;
        if self.eval_period == 0 || self.max_rounds == 0 || self.reward_window == 0 {
            return Err(Error::InvalidConfig(
                "eval_period, max_rounds and reward_window must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// What happened in one turn.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnOutcome {
    pub designated: usize,
    pub active: ActiveSet,
    /// Move explored by the designated sensor, if it was active.
    pub explored: Option<u32>,
    pub success: bool,
    /// Acknowledgment as seen by the sensors, after erasures.
    pub observed: bool,
}

/// Mutable state of a training run.
#[derive(Debug, Clone)]
pub struct TrainingState {
    tables: Vec<QTable>,
    turns: u64,
    cursor: usize,
    rng: SimRng,
    config: TrainingConfig,
    schedule: LearningSchedule,
    recent: VecDeque<bool>,
    recent_hits: usize,
}

impl TrainingState {
    /// Fresh state with random initial estimates drawn from `seed`.
    pub fn new(
        n_sensors: usize,
        channels: usize,
        config: TrainingConfig,
        seed: u64,
    ) -> Result<Self> {
        check_channels(channels)?;
        config.validate()?;
        if n_sensors == 0 {
            return Err(Error::InvalidConfig("no sensors".into()));
        }
        let mut rng = rng_from_seed(seed);
        let arms = move_count(channels);
        let tables = (0..n_sensors)
            .map(|_| QTable::random(arms, &mut rng))
            .collect();
        Self::with_tables(tables, config, rng)
    }

    /// State with given tables; they must all have the same arm count.
    pub fn with_tables(tables: Vec<QTable>, config: TrainingConfig, rng: SimRng) -> Result<Self> {
        config.validate()?;
        let arms = tables.first().map(QTable::arms).unwrap_or(0);
        if arms < 2 || !arms.is_power_of_two() || tables.iter().any(|t| t.arms() != arms) {
            return Err(Error::InvalidConfig(
                "tables must share a power-of-two arm count of at least 2".into(),
            ));
        }
        Ok(Self {
            tables,
            turns: 0,
            cursor: 0,
            rng,
            schedule: LearningSchedule::new(config.alpha_exponent)?,
            config,
            recent: VecDeque::with_capacity(config.reward_window),
            recent_hits: 0,
        })
    }

    pub fn tables(&self) -> &[QTable] {
        &self.tables
    }

    pub fn turns(&self) -> u64 {
        self.turns
    }

    /// Sensor designated in the next turn.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn channels(&self) -> usize {
        self.tables[0].arms().trailing_zeros() as usize
    }

    pub fn greedy_codes(&self) -> Vec<u32> {
        self.tables.iter().map(QTable::greedy_move).collect()
    }

    pub fn greedy_strategy(&self) -> DeterministicStrategy {
        DeterministicStrategy::from_codes(&self.greedy_codes(), self.channels())
            .expect("greedy codes are in range")
    }

    /// Mean observed reward over the last `reward_window` turns.
    pub fn empirical_success(&self) -> f64 {
        if self.recent.is_empty() {
            0.0
        } else {
            self.recent_hits as f64 / self.recent.len() as f64
        }
    }

    /// Plays one turn.
    pub fn turn(&mut self, sampler: &ActiveSetSampler<'_>) -> TurnOutcome {
        let designated = self.cursor;
        self.cursor = (self.cursor + 1) % self.tables.len();
        self.turns += 1;

        let active = sampler.sample(&mut self.rng).clone();
        let arms = self.tables[0].arms() as u32;
        let mut explored = None;
        let mut codes = Vec::with_capacity(active.len());
        for &s in active.members() {
            if s == designated {
                let arm = self.rng.random_range(0..arms);
                explored = Some(arm);
                codes.push(arm);
            } else {
                codes.push(self.tables[s].greedy_move());
            }
        }
        let success = success_codes(codes);
        let erased =
            self.config.ack_loss_prob > 0.0 && self.rng.random::<f64>() < self.config.ack_loss_prob;
        let observed = success && !erased;

        if let Some(arm) = explored {
            self.tables[designated]
                .update(arm as usize, observed, &self.schedule)
                .expect("explored arm is in range");
        }

        if self.recent.len() == self.config.reward_window && self.recent.pop_front() == Some(true) {
            self.recent_hits -= 1;
        }
        self.recent.push_back(observed);
        self.recent_hits += usize::from(observed);

        TurnOutcome {
            designated,
            active,
            explored,
            success,
            observed,
        }
    }

    /// Plays one round: one turn per sensor.
    pub fn round(&mut self, sampler: &ActiveSetSampler<'_>) {
        for _ in 0..self.tables.len() {
            self.turn(sampler);
        }
    }
}

/// One evaluation of the greedy profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub round: u64,
    /// Exact success probability of the all-greedy profile.
    pub exact_success: f64,
    /// Mean observed reward over the recent window of turns.
    pub empirical_success: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingCurve {
    pub points: Vec<CurvePoint>,
}

impl TrainingCurve {
    pub fn final_exact(&self) -> Option<f64> {
        self.points.last().map(|p| p.exact_success)
    }

    /// First round whose greedy profile reaches `target` (minus `tol`).
    pub fn first_round_reaching(&self, target: f64, tol: f64) -> Option<u64> {
        self.points
            .iter()
            .find(|p| p.exact_success >= target - tol)
            .map(|p| p.round)
    }

    /// First round whose empirical average exceeds `level`.
    pub fn first_empirical_above(&self, level: f64) -> Option<u64> {
        self.points
            .iter()
            .find(|p| p.empirical_success > level)
            .map(|p| p.round)
    }

    /// CSV with header `round,exact_success,empirical_success`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,exact_success,empirical_success\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{:?},{:?}",
                p.round, p.exact_success, p.empirical_success
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutcome {
    pub strategy: DeterministicStrategy,
    pub value: f64,
    pub curve: TrainingCurve,
    pub rounds: u64,
    /// True when training stopped on a stable profile rather than the round cap.
    pub converged: bool,
}

/// Trains all sensors from scratch and returns the final greedy profile.
pub fn train(
    pmf: &ActivationPmf,
    channels: usize,
    config: &TrainingConfig,
    seed: u64,
) -> Result<TrainingOutcome> {
    let mut state = TrainingState::new(pmf.n_sensors(), channels, *config, seed)?;
    train_from(&mut state, pmf)
}

/// Continues training from an existing state.
pub fn train_from(state: &mut TrainingState, pmf: &ActivationPmf) -> Result<TrainingOutcome> {
    if state.tables().len() != pmf.n_sensors() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} table(s), pmf has N={}",
            state.tables().len(),
            pmf.n_sensors()
        )));
    }
    let config = state.config;
    let sampler = ActiveSetSampler::new(pmf);
    let mut curve = TrainingCurve::default();
    let mut previous: Option<Vec<u32>> = None;
    let mut stable = 0;
    let mut converged = false;
    let mut rounds = 0;

    for round in 1..=config.max_rounds {
        state.round(&sampler);
        rounds = round;
        if round % config.eval_period != 0 {
            continue;
        }
        let codes = state.greedy_codes();
        curve.points.push(CurvePoint {
            round,
            exact_success: value_of_codes(&codes, pmf),
            empirical_success: state.empirical_success(),
        });
        if previous.as_ref() == Some(&codes) {
            stable += 1;
        } else {
            stable = 0;
        }
        previous = Some(codes);
        if config.patience > 0 && stable >= config.patience {
            converged = true;
            break;
        }
    }

    let strategy = state.greedy_strategy();
    let value = value_of_codes(&strategy.codes(), pmf);
    Ok(TrainingOutcome {
        strategy,
        value,
        curve,
        rounds,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::make_deterministic_partition;

    #[test]
    fn update_examples() {
        let s = LearningSchedule::sample_average();
        let mut q = QTable::new(vec![0.5, 0.5]);
        assert_eq!(q.update(1, true, &s).unwrap(), 1.0);
        assert_eq!(q.update(1, false, &s).unwrap(), 0.5);
        assert_eq!(q.values()[0], 0.5);
        assert_eq!(q.visits(), &[0, 2]);
        assert_eq!(
            q.update(2, true, &s),
            Err(Error::ArmOutOfRange { arm: 2, arms: 2 })
        );
    }

    #[test]
    fn zero_rewards_decay_monotonically() {
        for schedule in [
            LearningSchedule::sample_average(),
            LearningSchedule::new(0.6).unwrap(),
        ] {
            let mut q = QTable::new(vec![0.9]);
            let mut last = 0.9;
            for _ in 0..200 {
                let v = q.update(0, false, &schedule).unwrap();
                assert!(v <= last);
                last = v;
            }
            // with a = 1/k the first visit already overwrites
            assert!(last < 1e-3 || schedule.exponent() == 1.0 && last == 0.0);
        }
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(QTable::new(vec![0.2, 0.9, 0.1, 0.9]).greedy_move(), 1);
        assert_eq!(QTable::new(vec![0.4; 4]).greedy_move(), 0);
        assert_eq!(QTable::new(vec![0.1, 0.2, 0.3, 0.4]).greedy_move(), 3);
    }

    #[test]
    fn schedule_bounds() {
        assert!(LearningSchedule::new(0.5).is_err());
        assert!(LearningSchedule::new(1.1).is_err());
        assert!(LearningSchedule::new(0.75).is_ok());
    }

    #[test]
    fn config_validation() {
        let ok = TrainingConfig::default();
        assert!(ok.validate().is_ok());
        assert!(TrainingConfig {
            ack_loss_prob: 1.5,
            ..ok
        }
        .validate()
        .is_err());
        assert!(TrainingConfig {
            max_rounds: 0,
            ..ok
        }
        .validate()
        .is_err());
        assert!(TrainingConfig {
            eval_period: 0,
            ..ok
        }
        .validate()
        .is_err());
        assert!(TrainingConfig {
            alpha_exponent: 0.3,
            ..ok
        }
        .validate()
        .is_err());
    }

    #[test]
    fn cursor_wraps() {
        let pmf = make_deterministic_partition(4, 2).unwrap();
        let sampler = ActiveSetSampler::new(&pmf);
        let mut st = TrainingState::new(4, 1, TrainingConfig::default(), 3).unwrap();
        let seq: Vec<usize> = (0..6).map(|_| st.turn(&sampler).designated).collect();
        assert_eq!(seq, vec![0, 1, 2, 3, 0, 1]);
        assert_eq!(st.turns(), 6);
    }

    #[test]
    fn distinct_greedy_partners_succeed() {
        // sensor 1 is designated but never active, so every turn is greedy
        let pmf = ActivationPmf::new(3, vec![(ActiveSet::new(vec![0, 2]).unwrap(), 1.0)]).unwrap();
        let tables = vec![
            QTable::new(vec![0.0, 1.0]),
            QTable::new(vec![0.0, 1.0]),
            QTable::new(vec![1.0, 0.0]),
        ];
        let mut st =
            TrainingState::with_tables(tables, TrainingConfig::default(), rng_from_seed(0))
                .unwrap();
        let sampler = ActiveSetSampler::new(&pmf);
        st.turn(&sampler);
        let out = st.turn(&sampler);
        assert_eq!(out.designated, 1);
        assert_eq!(out.explored, None);
        assert!(out.success && out.observed);
    }
}
