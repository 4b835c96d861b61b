//! Exhaustive search over deterministic strategies.
//!
//! Every assignment of one of the `2^M` moves to each of the `N` sensors is
//! evaluated exactly against the PMF support, so the search visits
//! `(2^M)^N` strategies. Strategies are ordered lexicographically by their
//! move-code vector (sensor 0 most significant); among equal values the
//! lexicographically smallest strategy wins.
//!
//! Channel labels are interchangeable: permuting the channels of every move
//! preserves the success predicate. The lexicographically smallest optimum
//! therefore gives sensor 0 the smallest code in its permutation orbit,
//! which is `2^k - 1` for a move that transmits on `k` channels. Restricting
//! sensor 0 to those `M + 1` codes shrinks the search without changing the
//! returned strategy.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    check_channels, move_count, success_codes, ActivationPmf, DeterministicStrategy,
};

/// Default cap on the number of strategies in the full search space.
pub const DEFAULT_MAX_STRATEGIES: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteForceOptions {
    /// Refuse instances whose full space `(2^M)^N` exceeds this.
    pub max_strategies: u64,
    pub symmetry_pruning: bool,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        Self {
            max_strategies: DEFAULT_MAX_STRATEGIES,
            symmetry_pruning: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub strategy: DeterministicStrategy,
    pub value: f64,
    /// Strategies actually evaluated.
    pub evaluated: u64,
}

/// Enumeration order: the moves tried for sensor 0, then all moves for every
/// other sensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOrder {
    pub n_sensors: usize,
    pub channels: usize,
    pub first_sensor_moves: Vec<u32>,
}

impl SearchOrder {
    pub fn full(n_sensors: usize, channels: usize) -> Self {
        Self {
            n_sensors,
            channels,
            first_sensor_moves: (0..move_count(channels) as u32).collect(),
        }
    }

    /// Number of strategies this order visits.
    pub fn size(&self) -> f64 {
        self.first_sensor_moves.len() as f64
            * (move_count(self.channels) as f64).powi(self.n_sensors as i32 - 1)
    }
}

/// Canonical search order: sensor 0 only tries one representative per
/// channel-permutation orbit (`0, 1, 3, 7, ...`).
pub fn prune_by_sensor_symmetry(pmf: &ActivationPmf, channels: usize) -> SearchOrder {
    SearchOrder {
        n_sensors: pmf.n_sensors(),
        channels,
        first_sensor_moves: (0..=channels).map(|k| (1u32 << k) - 1).collect(),
    }
}

/// Optimal deterministic strategy under the default options.
pub fn brute_force_optimal(pmf: &ActivationPmf, channels: usize) -> Result<ExactSolution> {
    brute_force_optimal_with(pmf, channels, &BruteForceOptions::default())
}

pub fn brute_force_optimal_with(
    pmf: &ActivationPmf,
    channels: usize,
    opts: &BruteForceOptions,
) -> Result<ExactSolution> {
    check_channels(channels)?;
    let n = pmf.n_sensors();
    let full = (move_count(channels) as f64).powi(n as i32);
    if full > opts.max_strategies as f64 {
        return Err(Error::InstanceTooLarge {
            strategies: full,
            limit: opts.max_strategies,
        });
    }
    let order = if opts.symmetry_pruning {
        prune_by_sensor_symmetry(pmf, channels)
    } else {
        SearchOrder::full(n, channels)
    };
    search(pmf, &order)
}

/// Support flattened into contiguous member lists, in stored order.
struct FlatSupport {
    members: Vec<usize>,
    ends: Vec<usize>,
    probs: Vec<f64>,
}

impl FlatSupport {
    fn new(pmf: &ActivationPmf) -> Self {
        let mut members = Vec::new();
        let mut ends = Vec::new();
        let mut probs = Vec::new();
        for (set, p) in pmf.support() {
            members.extend_from_slice(set.members());
            ends.push(members.len());
            probs.push(*p);
        }
        Self {
            members,
            ends,
            probs,
        }
    }

    // Must add the same terms in the same order as `value_of_codes`, so the
    // reported optimum re-evaluates bit-identically.
    #[inline]
    fn value(&self, codes: &[u32]) -> f64 {
        let mut total = 0.0;
        let mut start = 0;
        for (&end, &p) in self.ends.iter().zip(&self.probs) {
            if success_codes(self.members[start..end].iter().map(|&s| codes[s])) {
                total += p;
            }
            start = end;
        }
        total
    }
}

/// Runs the enumeration described by `order`.
pub fn search(pmf: &ActivationPmf, order: &SearchOrder) -> Result<ExactSolution> {
    check_channels(order.channels)?;
    let n = pmf.n_sensors();
    if order.n_sensors != n {
        return Err(Error::DimensionMismatch(format!(
            "search order covers {} sensor(s), pmf has N={n}",
            order.n_sensors
        )));
    }
    let arms = move_count(order.channels) as u32;
    let flat = FlatSupport::new(pmf);

    // One task per (sensor 0, sensor 1) prefix; tasks are in lexicographic
    // order and the reduction keeps the earliest best, so the result does not
    // depend on the worker count.
    let prefixes: Vec<Vec<u32>> = order
        .first_sensor_moves
        .iter()
        .flat_map(|&f| {
            if n > 1 {
                (0..arms).map(|s| vec![f, s]).collect::<Vec<_>>()
            } else {
                vec![vec![f]]
            }
        })
        .collect();

    let results: Vec<(f64, Vec<u32>, u64)> = prefixes
        .par_iter()
        .map(|prefix| {
            let mut codes = vec![0u32; n];
            codes[..prefix.len()].copy_from_slice(prefix);
            let mut best_value = f64::NEG_INFINITY;
            let mut best = codes.clone();
            let mut evaluated = 0u64;
            loop {
                let v = flat.value(&codes);
                evaluated += 1;
                if v > best_value {
                    best_value = v;
                    best.copy_from_slice(&codes);
                }
                // odometer over the free sensors, last sensor fastest
                let mut k = n;
                loop {
                    if k == prefix.len() {
                        return (best_value, best, evaluated);
                    }
                    k -= 1;
                    codes[k] += 1;
                    if codes[k] < arms {
                        break;
                    }
                    codes[k] = 0;
                }
            }
        })
        .collect();

    let evaluated = results.iter().map(|r| r.2).sum();
    let (value, codes, _) = results
        .into_iter()
        .reduce(|best, r| if r.0 > best.0 { r } else { best })
        .expect("at least one prefix");
    Ok(ExactSolution {
        strategy: DeterministicStrategy::from_codes(&codes, order.channels)?,
        value,
        evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::{make_deterministic_partition, make_general_random};
    use crate::model::{expected_success_deterministic, ActiveSet};

    fn uniform_pairs_3() -> ActivationPmf {
        let set = |m: &[usize]| ActiveSet::new(m.to_vec()).unwrap();
        ActivationPmf::new(
            3,
            vec![
                (set(&[0, 1]), 1.0 / 3.0),
                (set(&[0, 2]), 1.0 / 3.0),
                (set(&[1, 2]), 1.0 / 3.0),
            ],
        )
        .unwrap()
    }

    /// Independent oracle: enumerate every code vector and evaluate it with
    /// the model evaluator, keeping the first maximum.
    fn naive_optimum(pmf: &ActivationPmf, channels: usize) -> (Vec<u32>, f64) {
        let n = pmf.n_sensors();
        let arms = 1u64 << channels;
        let mut best = (vec![], f64::NEG_INFINITY);
        for idx in 0..arms.pow(n as u32) {
            let codes: Vec<u32> = (0..n)
                .map(|k| ((idx / arms.pow((n - 1 - k) as u32)) % arms) as u32)
                .collect();
            let s = DeterministicStrategy::from_codes(&codes, channels).unwrap();
            let v = expected_success_deterministic(&s, pmf).unwrap();
            if v > best.1 {
                best = (codes, v);
            }
        }
        best
    }

    #[test]
    fn uniform_pairs_single_channel() {
        let sol = brute_force_optimal(&uniform_pairs_3(), 1).unwrap();
        assert!((sol.value - 2.0 / 3.0).abs() < 1e-15);
        // smallest optimum: sensors 0 and 1 silent, sensor 2 transmits
        assert_eq!(sol.strategy.codes(), vec![0, 0, 1]);
    }

    #[test]
    fn dedicated_channels_always_succeed() {
        let sol = brute_force_optimal(&uniform_pairs_3(), 3).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pairing_reaches_one() {
        let pmf = make_deterministic_partition(10, 2).unwrap();
        let sol = brute_force_optimal(&pmf, 2).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
        let pruned = sol.evaluated;
        let full = brute_force_optimal_with(
            &pmf,
            2,
            &BruteForceOptions {
                symmetry_pruning: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(full.value, sol.value);
        assert_eq!(full.strategy, sol.strategy);
        assert_eq!(full.evaluated, 4u64.pow(10));
        assert_eq!(pruned, 3 * 4u64.pow(9));
    }

    #[test]
    fn pruning_orders() {
        let pmf = make_deterministic_partition(4, 2).unwrap();
        assert_eq!(
            prune_by_sensor_symmetry(&pmf, 2).first_sensor_moves,
            vec![0, 1, 3]
        );
        assert_eq!(
            prune_by_sensor_symmetry(&pmf, 1).first_sensor_moves,
            vec![0, 1]
        );
        assert_eq!(SearchOrder::full(4, 1).first_sensor_moves, vec![0, 1]);
    }

    #[test]
    fn pruned_matches_unpruned_and_naive() {
        for seed in 0..20 {
            let n = 4 + (seed as usize % 3);
            let a = 2 + (seed as usize % 2);
            let pmf = make_general_random(n, a, seed).unwrap();
            let pruned = brute_force_optimal(&pmf, 2).unwrap();
            let full = brute_force_optimal_with(
                &pmf,
                2,
                &BruteForceOptions {
                    symmetry_pruning: false,
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(pruned.value, full.value, "seed {seed}");
            assert_eq!(pruned.strategy, full.strategy, "seed {seed}");
            if n <= 5 {
                let (codes, v) = naive_optimum(&pmf, 2);
                assert_eq!(v, pruned.value);
                assert_eq!(codes, pruned.strategy.codes());
            }
            let re = expected_success_deterministic(&pruned.strategy, &pmf).unwrap();
            assert_eq!(re, pruned.value);
        }
    }

    #[test]
    fn size_guard() {
        let pmf = make_deterministic_partition(10, 2).unwrap();
        let err = brute_force_optimal_with(
            &pmf,
            2,
            &BruteForceOptions {
                max_strategies: 1000,
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::InstanceTooLarge { .. }));
        let pmf = make_deterministic_partition(20, 2).unwrap();
        assert!(brute_force_optimal(&pmf, 2).is_err());
    }

    #[test]
    fn single_sensor() {
        let pmf = ActivationPmf::new(1, vec![(ActiveSet::new(vec![0]).unwrap(), 1.0)]).unwrap();
        let sol = brute_force_optimal(&pmf, 2).unwrap();
        assert_eq!(sol.value, 1.0);
        assert_eq!(sol.strategy.codes(), vec![1]);
    }
}
