//! Sampling estimate of the success probability, used to cross-check the
//! exact evaluators.

use rand::Rng;
use rayon::prelude::*;

use super::{success_codes, ActivationPmf, DeterministicStrategy, MixedStrategy};
use crate::activation::ActiveSetSampler;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, SimRng};

/// Anything that yields one move per active sensor per slot.
pub trait MoveSource: Sync {
    fn n_sensors(&self) -> usize;
    fn draw_move(&self, sensor: usize, rng: &mut SimRng) -> u32;
}

impl MoveSource for DeterministicStrategy {
    fn n_sensors(&self) -> usize {
        DeterministicStrategy::n_sensors(self)
    }

    fn draw_move(&self, sensor: usize, _rng: &mut SimRng) -> u32 {
        self.moves()[sensor].code()
    }
}

impl MoveSource for MixedStrategy {
    fn n_sensors(&self) -> usize {
        MixedStrategy::n_sensors(self)
    }

    fn draw_move(&self, sensor: usize, rng: &mut SimRng) -> u32 {
        let row = self.row(sensor);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = 0;
        for (c, &q) in row.iter().enumerate() {
            if q <= 0.0 {
                continue;
            }
            acc += q;
            last = c;
            if u < acc {
                return c as u32;
            }
        }
        // u landed in the rounding slack above the row total
        last as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    pub successes: u64,
}

impl McEstimate {
    fn from_counts(successes: u64, samples: u64) -> Self {
        let p = successes as f64 / samples as f64;
        Self {
            estimate: p,
            std_error: (p * (1.0 - p) / samples as f64).sqrt(),
            samples,
            successes,
        }
    }
}

fn count_successes<S: MoveSource + ?Sized>(
    strategy: &S,
    sampler: &ActiveSetSampler<'_>,
    n_samples: u64,
    rng: &mut SimRng,
) -> u64 {
    let mut codes = Vec::new();
    let mut hits = 0;
    for _ in 0..n_samples {
        let set = sampler.sample(rng);
        codes.clear();
        codes.extend(set.members().iter().map(|&s| strategy.draw_move(s, rng)));
        if success_codes(codes.iter().copied()) {
            hits += 1;
        }
    }
    hits
}

fn check<S: MoveSource + ?Sized>(strategy: &S, pmf: &ActivationPmf, n_samples: u64) -> Result<()> {
    if n_samples == 0 {
        return Err(Error::InvalidConfig("n_samples must be at least 1".into()));
    }
    if strategy.n_sensors() != pmf.n_sensors() {
        return Err(Error::DimensionMismatch(format!(
            "strategy covers {} sensor(s), pmf has N={}",
            strategy.n_sensors(),
            pmf.n_sensors()
        )));
    }
    Ok(())
}

/// Empirical success rate over `n_samples` i.i.d. slots.
pub fn monte_carlo_success<S: MoveSource + ?Sized>(
    strategy: &S,
    pmf: &ActivationPmf,
    n_samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    check(strategy, pmf, n_samples)?;
    let sampler = ActiveSetSampler::new(pmf);
    let mut rng = rng_from_seed(seed);
    let hits = count_successes(strategy, &sampler, n_samples, &mut rng);
    Ok(McEstimate::from_counts(hits, n_samples))
}

/// Splits the samples across `workers` independent streams.
///
/// Worker `w` draws from `derive_seed(seed, w)`, so the result depends on
/// the seed and the worker count only, never on thread scheduling.
pub fn monte_carlo_success_parallel<S: MoveSource + ?Sized>(
    strategy: &S,
    pmf: &ActivationPmf,
    n_samples: u64,
    seed: u64,
    workers: usize,
) -> Result<McEstimate> {
    check(strategy, pmf, n_samples)?;
    let workers = workers.clamp(1, n_samples as usize) as u64;
    let sampler = ActiveSetSampler::new(pmf);
    let hits: u64 = (0..workers)
        .into_par_iter()
        .map(|w| {
            let share = n_samples / workers + u64::from(w < n_samples % workers);
            let mut rng = rng_from_seed(derive_seed(seed, w));
            count_successes(strategy, &sampler, share, &mut rng)
        })
        .sum();
    Ok(McEstimate::from_counts(hits, n_samples))
}
