//! Activation distributions: the three scenario families, sampling, and the
//! PMF text format.
//!
//! * **deterministic**: sensors are partitioned into consecutive blocks of
//!   `A`; each block is the active set with equal probability.
//! * **regular**: sensors sit on a circle. The first active sensor is uniform,
//!   each further one is drawn by circular distance from the previous pick
//!   (previous picks excluded, remaining weights renormalized).
//! * **general**: every size-`A` subset gets an i.i.d. uniform weight, then the
//!   weights are normalized.

mod file;

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{ActivationPmf, ActiveSet};
use crate::rng::{rng_from_seed, SimRng};

pub use file::{parse_pmf, to_pmf_string, ParseOptions, SUM_TOLERANCE};

/// Per-node pick probabilities by circular distance for `N = 10`:
/// distances 1 through 4. The opposite node (distance 5) is never picked.
pub const TEN_SENSOR_DISTANCES: [f64; 4] = [0.275, 0.125, 0.075, 0.025];

/// Per-node probability of picking a sensor at circular distance `d` from
/// the previous pick, for `d = 1 .. N/2 - 1`. The node at distance `N/2` has
/// weight zero. Two nodes sit at each listed distance, so the table must
/// satisfy `2 * sum = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTable {
    n_sensors: usize,
    per_node: Vec<f64>,
}

impl DistanceTable {
    pub fn new(n_sensors: usize, per_node: Vec<f64>) -> Result<Self> {
        if n_sensors < 4 || !n_sensors.is_multiple_of(2) {
            return Err(Error::UnsupportedScenario(format!(
                "regular circle needs an even N >= 4, got {n_sensors}"
            )));
        }
        if per_node.len() != n_sensors / 2 - 1 {
            return Err(Error::UnsupportedScenario(format!(
                "distance table for N={n_sensors} needs {} entries, got {}",
                n_sensors / 2 - 1,
                per_node.len()
            )));
        }
        if per_node.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::UnsupportedScenario(
                "distance table entries must be nonnegative".into(),
            ));
        }
        let total = 2.0 * per_node.iter().sum::<f64>();
        if (total - 1.0).abs() > crate::model::PROBABILITY_TOLERANCE {
            return Err(Error::UnsupportedScenario(format!(
                "distance table covers mass {total}, expected 1"
            )));
        }
        Ok(Self {
            n_sensors,
            per_node,
        })
    }

    /// The built-in table for ten sensors.
    pub fn ten_sensors() -> Self {
        Self {
            n_sensors: 10,
            per_node: TEN_SENSOR_DISTANCES.to_vec(),
        }
    }

    pub fn n_sensors(&self) -> usize {
        self.n_sensors
    }

    pub fn circular_distance(&self, u: usize, v: usize) -> usize {
        let d = u.abs_diff(v);
        d.min(self.n_sensors - d)
    }

    /// Probability of picking node `v` right after node `u`.
    pub fn weight(&self, u: usize, v: usize) -> f64 {
        let d = self.circular_distance(u, v);
        if d == 0 || d == self.n_sensors / 2 {
            0.0
        } else {
            self.per_node[d - 1]
        }
    }
}

/// Consecutive blocks of `set_size` sensors, each active with probability
/// `set_size / n_sensors`.
pub fn make_deterministic_partition(n_sensors: usize, set_size: usize) -> Result<ActivationPmf> {
    if set_size == 0 || n_sensors == 0 || !n_sensors.is_multiple_of(set_size) {
        return Err(Error::UnsupportedScenario(format!(
            "A={set_size} must divide N={n_sensors}"
        )));
    }
    let blocks = n_sensors / set_size;
    let p = 1.0 / blocks as f64;
    let entries = (0..blocks)
        .map(|b| {
            let members = (b * set_size..(b + 1) * set_size).collect();
            Ok((ActiveSet::new(members)?, p))
        })
        .collect::<Result<Vec<_>>>()?;
    ActivationPmf::new(n_sensors, entries)
}

/// Regular circle scenario for `N = 10` with the built-in distance table.
pub fn make_regular_circle(n_sensors: usize, set_size: usize) -> Result<ActivationPmf> {
    if n_sensors != 10 {
        return Err(Error::UnsupportedScenario(format!(
            "the built-in distance table covers N=10 only (got N={n_sensors}); \
             use make_regular_circle_with_table"
        )));
    }
    make_regular_circle_with_table(&DistanceTable::ten_sensors(), set_size)
}

/// Regular circle scenario for an arbitrary distance table; `set_size` must
/// be 2 or 3.
///
/// Probabilities are accumulated over all ordered pick sequences that yield
/// the same unordered set.
pub fn make_regular_circle_with_table(
    table: &DistanceTable,
    set_size: usize,
) -> Result<ActivationPmf> {
    let n = table.n_sensors();
    let first = 1.0 / n as f64;
    let mut entries = Vec::new();
    match set_size {
        2 => {
            for f in 0..n {
                for s in (0..n).filter(|&s| s != f) {
                    let w = first * table.weight(f, s);
                    if w > 0.0 {
                        entries.push((ActiveSet::new(vec![f, s])?, w));
                    }
                }
            }
        }
        3 => {
            for f in 0..n {
                for s in (0..n).filter(|&s| s != f) {
                    let w1 = first * table.weight(f, s);
                    if w1 == 0.0 {
                        continue;
                    }
                    // every node but `s` and `f` stays eligible for the third pick
                    let remaining = 1.0 - table.weight(s, f);
                    for t in (0..n).filter(|&t| t != f && t != s) {
                        let w = w1 * table.weight(s, t) / remaining;
                        if w > 0.0 {
                            entries.push((ActiveSet::new(vec![f, s, t])?, w));
                        }
                    }
                }
            }
        }
        a => {
            return Err(Error::UnsupportedScenario(format!(
                "regular circle supports A in {{2, 3}}, got A={a}"
            )))
        }
    }
    ActivationPmf::from_accumulated(n, entries)
}

/// All `C(N, A)` subsets with i.i.d. uniform `(0, 1]` weights, normalized.
pub fn make_general_random(n_sensors: usize, set_size: usize, seed: u64) -> Result<ActivationPmf> {
    if set_size < 2 || set_size > n_sensors {
        return Err(Error::UnsupportedScenario(format!(
            "general scenario needs 2 <= A <= N, got N={n_sensors}, A={set_size}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut entries = Vec::new();
    let mut combo: Vec<usize> = (0..set_size).collect();
    loop {
        let w = 1.0 - rng.random::<f64>();
        entries.push((ActiveSet::new(combo.clone())?, w));
        // next combination in lexicographic order
        let Some(i) = (0..set_size)
            .rev()
            .find(|&i| combo[i] < n_sensors - set_size + i)
        else {
            break;
        };
        combo[i] += 1;
        for j in i + 1..set_size {
            combo[j] = combo[j - 1] + 1;
        }
    }
    ActivationPmf::normalized(n_sensors, entries)
}

/// Reusable sampler over the support of a PMF.
#[derive(Debug, Clone)]
pub struct ActiveSetSampler<'a> {
    pmf: &'a ActivationPmf,
    index: WeightedIndex<f64>,
}

impl<'a> ActiveSetSampler<'a> {
    pub fn new(pmf: &'a ActivationPmf) -> Self {
        let index = WeightedIndex::new(pmf.support().iter().map(|(_, p)| *p))
            .expect("a valid pmf has positive finite weights");
        Self { pmf, index }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &'a ActiveSet {
        &self.pmf.support()[self.index.sample(rng)].0
    }
}

/// Draws one active set. Builds a sampler per call; loops should hold an
/// [`ActiveSetSampler`] instead.
pub fn sample_active_set(pmf: &ActivationPmf, rng: &mut SimRng) -> ActiveSet {
    ActiveSetSampler::new(pmf).sample(rng).clone()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    Deterministic,
    Regular,
    General,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Deterministic => "deterministic",
            Self::Regular => "regular",
            Self::General => "general",
        })
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "deterministic" => Ok(Self::Deterministic),
            "regular" => Ok(Self::Regular),
            "general" => Ok(Self::General),
            other => Err(Error::UnsupportedScenario(format!(
                "unknown scenario kind {other:?}"
            ))),
        }
    }
}

/// A named scenario family with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n_sensors: usize,
    pub set_size: usize,
    /// Only used by [`ScenarioKind::General`].
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_sensors < 2 {
            return Err(Error::UnsupportedScenario(format!(
                "N must be at least 2, got {}",
                self.n_sensors
            )));
        }
        if self.set_size < 2 || self.set_size > self.n_sensors {
            return Err(Error::UnsupportedScenario(format!(
                "A must satisfy 2 <= A <= N, got A={} N={}",
                self.set_size, self.n_sensors
            )));
        }
        if self.kind == ScenarioKind::Deterministic && !self.n_sensors.is_multiple_of(self.set_size)
        {
            return Err(Error::UnsupportedScenario(format!(
                "A={} must divide N={}",
                self.set_size, self.n_sensors
            )));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<ActivationPmf> {
        self.validate()?;
        match self.kind {
            ScenarioKind::Deterministic => {
                make_deterministic_partition(self.n_sensors, self.set_size)
            }
            ScenarioKind::Regular => make_regular_circle(self.n_sensors, self.set_size),
            ScenarioKind::General => make_general_random(self.n_sensors, self.set_size, self.seed),
        }
    }
}
