//! Problem data types and the collision-channel success predicate.
//!
//! A slot involves `N` sensors and `M` orthogonal channels. A random subset
//! of the sensors (the [`ActiveSet`]) holds the same message; each active
//! sensor plays a [`ChannelMove`], i.e. it transmits on a subset of the
//! channels. A channel delivers the message iff exactly one active sensor
//! transmits on it, and the slot succeeds iff at least one channel delivers.
//!
//! Moves share one index space across the crate: the integer encoding
//! `code` has bit `m` set iff the move transmits on channel `m`, and code `0`
//! is silence. Bandit arms, colors in the conflict graph and cluster labels
//! all use this encoding.

pub(crate) mod eval;
mod monte_carlo;

use std::fmt;

use crate::error::{Error, Result};

pub use eval::{expected_success_deterministic, expected_success_mixed};
pub use monte_carlo::{monte_carlo_success, monte_carlo_success_parallel, McEstimate, MoveSource};

/// Largest supported channel count. Arms are indexed by `u32` codes and
/// tables of size `2^M` are allocated eagerly.
pub const MAX_CHANNELS: usize = 16;

/// Tolerance on the total mass of an in-memory [`ActivationPmf`] and on the
/// rows of a [`MixedStrategy`].
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

pub(crate) fn check_channels(channels: usize) -> Result<()> {
    if channels == 0 || channels > MAX_CHANNELS {
        return Err(Error::InvalidChannelCount {
            got: channels,
            max: MAX_CHANNELS,
        });
    }
    Ok(())
}

/// Number of distinct moves (arms, colors) for `channels` channels.
pub fn move_count(channels: usize) -> usize {
    1usize << channels
}

/// One sensor's transmission pattern over `M` channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChannelMove {
    code: u32,
    channels: u8,
}

impl ChannelMove {
    pub fn new(code: u32, channels: usize) -> Result<Self> {
        check_channels(channels)?;
        if (code as u64) >= (1u64 << channels) {
            return Err(Error::MoveOutOfRange { code, channels });
        }
        Ok(Self {
            code,
            channels: channels as u8,
        })
    }

    pub fn silent(channels: usize) -> Result<Self> {
        Self::new(0, channels)
    }

    /// Builds a move from per-channel flags; `bits[m]` is channel `m`.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let code = bits
            .iter()
            .enumerate()
            .fold(0u32, |acc, (m, &b)| acc | (u32::from(b) << m));
        Self::new(code, bits.len())
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.channels()).map(|m| self.transmits_on(m)).collect()
    }

    pub fn code(&self) -> u32 {
        self.code
    }

    pub fn channels(&self) -> usize {
        self.channels as usize
    }

    pub fn transmits_on(&self, channel: usize) -> bool {
        channel < self.channels() && (self.code >> channel) & 1 == 1
    }

    pub fn is_silent(&self) -> bool {
        self.code == 0
    }

    /// Same pattern on a larger channel set; the added channels stay silent.
    pub fn embed(&self, channels: usize) -> Result<Self> {
        if channels < self.channels() {
            return Err(Error::DimensionMismatch(format!(
                "cannot embed a {}-channel move into {channels} channel(s)",
                self.channels
            )));
        }
        Self::new(self.code, channels)
    }
}

impl fmt::Display for ChannelMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for m in 0..self.channels() {
            if m > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", u8::from(self.transmits_on(m)))?;
        }
        f.write_str(")")
    }
}

/// Collision outcome for a group of move codes.
///
/// Tracks channels used at least once and channels used more than once; the
/// slot succeeds iff some channel is in the first set but not the second.
#[inline]
pub fn success_codes<I: IntoIterator<Item = u32>>(codes: I) -> bool {
    let mut once = 0u32;
    let mut multi = 0u32;
    for c in codes {
        multi |= once & c;
        once |= c;
    }
    once & !multi != 0
}

/// A set of simultaneously active sensors, stored as sorted indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActiveSet(Vec<usize>);

impl ActiveSet {
    /// Sorts `members`; duplicates are rejected.
    pub fn new(mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        if let Some(w) = members.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidActiveSet(format!(
                "sensor {} listed twice",
                w[0]
            )));
        }
        Ok(Self(members))
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, sensor: usize) -> bool {
        self.0.binary_search(&sensor).is_ok()
    }
}

impl fmt::Display for ActiveSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("}")
    }
}

/// Success predicate for one slot.
///
/// `moves[n]` is the move of sensor `n`. Sensors outside `active` are
/// ignored; an active sensor without an entry is a contract violation.
pub fn success(moves: &[ChannelMove], active: &ActiveSet) -> Result<bool> {
    let mut codes = Vec::with_capacity(active.len());
    for &s in active.members() {
        let mv = moves.get(s).ok_or(Error::MissingMove(s))?;
        codes.push(mv.code());
    }
    Ok(success_codes(codes))
}

/// Distribution of the active set over subsets of `N` sensors.
///
/// The support is stored sparsely and sorted by active set, so every
/// iteration over it visits entries in the same order.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationPmf {
    n_sensors: usize,
    support: Vec<(ActiveSet, f64)>,
}

impl ActivationPmf {
    /// Validates and stores `entries`.
    ///
    /// Each probability must be strictly positive, sets must be distinct and
    /// non-empty, members must be `< n_sensors`, and the total must be 1
    /// within [`PROBABILITY_TOLERANCE`].
    pub fn new(n_sensors: usize, entries: Vec<(ActiveSet, f64)>) -> Result<Self> {
        let pmf = Self::unchecked_sorted(n_sensors, entries)?;
        let total = pmf.total_mass();
        if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::InvalidPmf(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(pmf)
    }

    /// Like [`ActivationPmf::new`] but rescales the entries to unit mass.
    pub fn normalized(n_sensors: usize, entries: Vec<(ActiveSet, f64)>) -> Result<Self> {
        let mut pmf = Self::unchecked_sorted(n_sensors, entries)?;
        let total = pmf.total_mass();
        for (_, p) in &mut pmf.support {
            *p /= total;
        }
        Ok(pmf)
    }

    /// Sums the weights of repeated sets and drops zero weights before
    /// validating. Used by constructors that enumerate ordered picks.
    pub fn from_accumulated<I>(n_sensors: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ActiveSet, f64)>,
    {
        let mut acc = std::collections::BTreeMap::new();
        for (set, p) in entries {
            *acc.entry(set).or_insert(0.0) += p;
        }
        let entries = acc.into_iter().filter(|(_, p)| *p != 0.0).collect();
        Self::new(n_sensors, entries)
    }

    fn unchecked_sorted(n_sensors: usize, mut entries: Vec<(ActiveSet, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidPmf("empty support".into()));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidPmf(format!(
                    "duplicate active set {}",
                    w[0].0
                )));
            }
        }
        for (set, p) in &entries {
            if set.is_empty() {
                return Err(Error::InvalidPmf("empty active set in support".into()));
            }
            if let Some(&s) = set.members().iter().find(|&&s| s >= n_sensors) {
                return Err(Error::InvalidPmf(format!(
                    "sensor {s} in {set} out of range for N={n_sensors}"
                )));
            }
            if !(p.is_finite() && *p > 0.0) {
                return Err(Error::InvalidPmf(format!(
                    "probability of {set} must be positive and finite, got {p}"
                )));
            }
        }
        Ok(Self {
            n_sensors,
            support: entries,
        })
    }

    pub fn n_sensors(&self) -> usize {
        self.n_sensors
    }

    pub fn support(&self) -> &[(ActiveSet, f64)] {
        &self.support
    }

    pub fn total_mass(&self) -> f64 {
        self.support.iter().map(|(_, p)| p).sum()
    }

    /// Probability of exactly this set being active (0 outside the support).
    pub fn probability(&self, set: &ActiveSet) -> f64 {
        self.support
            .binary_search_by(|(s, _)| s.cmp(set))
            .map(|i| self.support[i].1)
            .unwrap_or(0.0)
    }

    /// Probability that each sensor is active.
    pub fn marginals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_sensors];
        for (set, p) in &self.support {
            for &s in set.members() {
                out[s] += p;
            }
        }
        out
    }

    pub fn max_set_size(&self) -> usize {
        self.support.iter().map(|(s, _)| s.len()).max().unwrap_or(0)
    }

    /// True when every support set has exactly two members.
    pub fn is_pairwise(&self) -> bool {
        self.support.iter().all(|(s, _)| s.len() == 2)
    }

    pub(crate) fn require_pairwise(&self) -> Result<()> {
        match self.support.iter().find(|(s, _)| s.len() != 2) {
            Some((s, _)) => Err(Error::NotPairwise(s.to_string(), s.len())),
            None => Ok(()),
        }
    }
}

/// A fixed move per sensor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeterministicStrategy {
    moves: Vec<ChannelMove>,
}

impl DeterministicStrategy {
    pub fn new(moves: Vec<ChannelMove>) -> Result<Self> {
        if let Some(first) = moves.first() {
            if moves.iter().any(|m| m.channels() != first.channels()) {
                return Err(Error::InvalidStrategy(
                    "moves use different channel counts".into(),
                ));
            }
        } else {
            return Err(Error::InvalidStrategy("no sensors".into()));
        }
        Ok(Self { moves })
    }

    pub fn from_codes(codes: &[u32], channels: usize) -> Result<Self> {
        let moves = codes
            .iter()
            .map(|&c| ChannelMove::new(c, channels))
            .collect::<Result<Vec<_>>>()?;
        Self::new(moves)
    }

    pub fn silent(n_sensors: usize, channels: usize) -> Result<Self> {
        Self::from_codes(&vec![0; n_sensors], channels)
    }

    pub fn moves(&self) -> &[ChannelMove] {
        &self.moves
    }

    pub fn codes(&self) -> Vec<u32> {
        self.moves.iter().map(ChannelMove::code).collect()
    }

    pub fn n_sensors(&self) -> usize {
        self.moves.len()
    }

    pub fn channels(&self) -> usize {
        self.moves[0].channels()
    }

    pub fn embed(&self, channels: usize) -> Result<Self> {
        let moves = self
            .moves
            .iter()
            .map(|m| m.embed(channels))
            .collect::<Result<Vec<_>>>()?;
        Self::new(moves)
    }
}

impl fmt::Display for DeterministicStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, m) in self.moves.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

/// Per-sensor probability vectors over the `2^M` moves.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy {
    channels: usize,
    rows: Vec<Vec<f64>>,
}

impl MixedStrategy {
    pub fn new(rows: Vec<Vec<f64>>, channels: usize) -> Result<Self> {
        check_channels(channels)?;
        if rows.is_empty() {
            return Err(Error::InvalidStrategy("no sensors".into()));
        }
        let arms = move_count(channels);
        for (n, row) in rows.iter().enumerate() {
            if row.len() != arms {
                return Err(Error::InvalidStrategy(format!(
                    "row {n} has {} entries, expected {arms}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::InvalidStrategy(format!(
                    "row {n} has a negative entry"
                )));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
                return Err(Error::InvalidStrategy(format!(
                    "row {n} sums to {total}, expected 1"
                )));
            }
        }
        Ok(Self { channels, rows })
    }

    /// Point masses on the moves of `strategy`.
    pub fn from_deterministic(strategy: &DeterministicStrategy) -> Self {
        let arms = move_count(strategy.channels());
        let rows = strategy
            .moves()
            .iter()
            .map(|m| {
                let mut row = vec![0.0; arms];
                row[m.code() as usize] = 1.0;
                row
            })
            .collect();
        Self {
            channels: strategy.channels(),
            rows,
        }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, sensor: usize) -> &[f64] {
        &self.rows[sensor]
    }

    pub fn n_sensors(&self) -> usize {
        self.rows.len()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Returns a copy with the row of `sensor` replaced.
    pub fn with_row(&self, sensor: usize, row: Vec<f64>) -> Result<Self> {
        let mut rows = self.rows.clone();
        *rows
            .get_mut(sensor)
            .ok_or_else(|| Error::DimensionMismatch(format!("no sensor {sensor}")))? = row;
        Self::new(rows, self.channels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(m: &[usize]) -> ActiveSet {
        ActiveSet::new(m.to_vec()).unwrap()
    }

    fn mv(bits: &[u8]) -> ChannelMove {
        ChannelMove::from_bits(&bits.iter().map(|&b| b == 1).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn move_encoding() {
        let m = mv(&[1, 0]);
        assert_eq!(m.code(), 1);
        assert_eq!(mv(&[0, 1]).code(), 2);
        assert_eq!(mv(&[1, 1]).code(), 3);
        assert_eq!(m.to_string(), "(1,0)");
        assert!(ChannelMove::new(4, 2).is_err());
        assert!(ChannelMove::new(0, 0).is_err());
        assert!(ChannelMove::new(0, MAX_CHANNELS + 1).is_err());
        assert_eq!(m.embed(3).unwrap().bits(), vec![true, false, false]);
        assert!(m.embed(1).is_err());
    }

    #[test]
    fn success_examples() {
        // lone transmitter
        let mut moves = vec![ChannelMove::silent(2).unwrap(); 4];
        moves[3] = mv(&[1, 0]);
        assert!(success(&moves, &set(&[3])).unwrap());

        // same move twice: collision on ch 0, silence on ch 1
        assert!(!success(&[mv(&[1, 0]), mv(&[1, 0])], &set(&[0, 1])).unwrap());

        // ch 0 has exactly one transmitter
        assert!(success(&[mv(&[1, 1]), mv(&[0, 1])], &set(&[0, 1])).unwrap());

        // ch 1 has exactly one transmitter
        assert!(success(&[mv(&[1, 0]), mv(&[1, 0]), mv(&[0, 1])], &set(&[0, 1, 2])).unwrap());
    }

    #[test]
    fn success_missing_move() {
        let moves = vec![mv(&[1, 0])];
        assert_eq!(success(&moves, &set(&[0, 2])), Err(Error::MissingMove(2)));
    }

    #[test]
    fn success_codes_matches_channel_counting() {
        // Cross-check the bit trick against per-channel counting on all
        // triples of 3-channel moves.
        for a in 0..8u32 {
            for b in 0..8u32 {
                for c in 0..8u32 {
                    let by_count = (0..3)
                        .any(|m| [a, b, c].iter().filter(|&&x| (x >> m) & 1 == 1).count() == 1);
                    assert_eq!(success_codes([a, b, c]), by_count, "{a} {b} {c}");
                }
            }
        }
    }

    #[test]
    fn active_set_rejects_duplicates() {
        assert!(ActiveSet::new(vec![1, 1]).is_err());
        assert_eq!(set(&[3, 1]).members(), &[1, 3]);
    }

    #[test]
    fn pmf_validation() {
        assert!(ActivationPmf::new(2, vec![]).is_err());
        assert!(ActivationPmf::new(2, vec![(set(&[0, 1]), 0.5)]).is_err());
        assert!(ActivationPmf::new(2, vec![(set(&[0, 2]), 1.0)]).is_err());
        assert!(ActivationPmf::new(2, vec![(set(&[0]), 1.0), (set(&[1]), 0.0)]).is_err());
        assert!(ActivationPmf::new(2, vec![(set(&[0]), 0.5), (set(&[0]), 0.5)]).is_err());
        assert!(ActivationPmf::new(2, vec![(set(&[]), 1.0)]).is_err());
        let pmf = ActivationPmf::new(3, vec![(set(&[1, 2]), 0.25), (set(&[0, 1]), 0.75)]).unwrap();
        assert_eq!(pmf.support()[0].0, set(&[0, 1]));
        assert_eq!(pmf.probability(&set(&[1, 2])), 0.25);
        assert_eq!(pmf.probability(&set(&[0, 2])), 0.0);
        assert_eq!(pmf.marginals(), vec![0.75, 1.0, 0.25]);
        assert!(pmf.is_pairwise());
    }

    #[test]
    fn pmf_normalized_and_accumulated() {
        let pmf = ActivationPmf::normalized(2, vec![(set(&[0]), 2.0), (set(&[1]), 6.0)]).unwrap();
        assert_eq!(pmf.probability(&set(&[1])), 0.75);
        let pmf = ActivationPmf::from_accumulated(
            2,
            vec![(set(&[0, 1]), 0.5), (set(&[1, 0]), 0.5), (set(&[0]), 0.0)],
        )
        .unwrap();
        assert_eq!(pmf.support().len(), 1);
        assert_eq!(pmf.probability(&set(&[0, 1])), 1.0);
    }

    #[test]
    fn mixed_strategy_validation() {
        assert!(MixedStrategy::new(vec![vec![0.5, 0.5]], 1).is_ok());
        assert!(MixedStrategy::new(vec![vec![0.5, 0.4]], 1).is_err());
        assert!(MixedStrategy::new(vec![vec![1.5, -0.5]], 1).is_err());
        assert!(MixedStrategy::new(vec![vec![1.0]], 1).is_err());
        let det = DeterministicStrategy::from_codes(&[2, 0], 2).unwrap();
        let phi = MixedStrategy::from_deterministic(&det);
        assert_eq!(phi.row(0), &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn strategy_channel_mismatch() {
        let moves = vec![
            ChannelMove::new(1, 1).unwrap(),
            ChannelMove::new(1, 2).unwrap(),
        ];
        assert!(DeterministicStrategy::new(moves).is_err());
    }
}
