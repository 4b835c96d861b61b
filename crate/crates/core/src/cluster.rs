//! Clustering-based strategies.
//!
//! For pairwise activation, sensors are grouped into at most `2^M` clusters
//! and each cluster plays its own move. Only pairs inside one cluster can
//! fail, so the failure probability is the total within-cluster cost
//! `d(C) = sum of p_A({u, v}) over unordered pairs in C`.
//!
//! Clusters are produced top-down (a DIANA-style divisive split): start from
//! one cluster, repeatedly split the most expensive one by moving out its most
//! expensive sensor and letting other members follow it when that lowers
//! their cost.
//!
//! For larger active sets [`greedy_assign`] fixes sensors one at a time, most
//! frequently active first, each to the move that maximizes the success
//! probability of the sensors fixed so far.

use crate::error::{Error, Result};
use crate::graph::{build_conflict_graph, ConflictGraph};
use crate::model::eval::value_of_codes;
use crate::model::{check_channels, move_count, ActivationPmf, ChannelMove, DeterministicStrategy};

/// Relative tolerance used when comparing objective values in heuristics.
const VALUE_EPS: f64 = 1e-12;

/// How members are reassigned after the splinter sensor leaves its cluster.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SplitRule {
    /// Single pass in ascending sensor order. A sensor moves to the new
    /// cluster iff its summed cost to the new cluster is strictly below its
    /// summed cost to the rest of the old one; both sides reflect moves made
    /// earlier in the pass.
    TotalCost,
    /// Classic DIANA: repeatedly move the sensor with the largest positive
    /// gap between its average cost to the old cluster and its average cost
    /// to the new one.
    #[default]
    AverageCost,
}

/// A partition of the sensors with one distinct move per cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    clusters: Vec<Vec<usize>>,
    moves: Vec<ChannelMove>,
}

impl Clustering {
    /// Checks the partition of `0..n_sensors`, distinct moves, and the
    /// `2^M` bound on the cluster count. Empty clusters are dropped.
    pub fn new(
        n_sensors: usize,
        clusters: Vec<Vec<usize>>,
        moves: Vec<ChannelMove>,
    ) -> Result<Self> {
        if clusters.len() != moves.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} cluster(s) but {} move(s)",
                clusters.len(),
                moves.len()
            )));
        }
        let Some(channels) = moves.first().map(ChannelMove::channels) else {
            return Err(Error::InvalidConfig("no clusters".into()));
        };
        if moves.iter().any(|m| m.channels() != channels) {
            return Err(Error::InvalidConfig(
                "moves use different channel counts".into(),
            ));
        }
        let mut seen = vec![false; n_sensors];
        for c in &clusters {
            for &s in c {
                match seen.get_mut(s) {
                    Some(flag) if !*flag => *flag = true,
                    Some(_) => {
                        return Err(Error::InvalidConfig(format!("sensor {s} in two clusters")))
                    }
                    None => return Err(Error::InvalidConfig(format!("sensor {s} out of range"))),
                }
            }
        }
        if let Some(s) = seen.iter().position(|f| !f) {
            return Err(Error::InvalidConfig(format!(
                "sensor {s} not in any cluster"
            )));
        }
        let mut codes: Vec<u32> = moves.iter().map(ChannelMove::code).collect();
        codes.sort_unstable();
        if codes.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("two clusters share a move".into()));
        }
        let (clusters, moves): (Vec<_>, Vec<_>) = clusters
            .into_iter()
            .zip(moves)
            .filter(|(c, _)| !c.is_empty())
            .map(|(mut c, m)| {
                c.sort_unstable();
                (c, m)
            })
            .unzip();
        Ok(Self { clusters, moves })
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn moves(&self) -> &[ChannelMove] {
        &self.moves
    }

    pub fn n_sensors(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }

    /// Every sensor plays the move of its cluster.
    pub fn strategy(&self) -> DeterministicStrategy {
        let mut moves = vec![self.moves[0]; self.n_sensors()];
        for (c, m) in self.clusters.iter().zip(&self.moves) {
            for &s in c {
                moves[s] = *m;
            }
        }
        DeterministicStrategy::new(moves).expect("clusters cover all sensors")
    }
}

fn graph_cost(cluster: &[usize], graph: &ConflictGraph) -> f64 {
    let mut sorted = cluster.to_vec();
    sorted.sort_unstable();
    let mut total = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        for &v in &sorted[i + 1..] {
            total += graph.weight(u, v);
        }
    }
    total
}

/// Co-activation mass inside `cluster`, each unordered pair counted once.
pub fn cluster_cost(cluster: &[usize], pmf: &ActivationPmf) -> Result<f64> {
    let graph = build_conflict_graph(pmf)?;
    if let Some(&s) = cluster.iter().find(|&&s| s >= pmf.n_sensors()) {
        return Err(Error::DimensionMismatch(format!("sensor {s} out of range")));
    }
    Ok(graph_cost(cluster, &graph))
}

/// Success probability of the clustering: one minus the within-cluster
/// cost summed over clusters.
pub fn clustering_value(clustering: &Clustering, pmf: &ActivationPmf) -> Result<f64> {
    let graph = build_conflict_graph(pmf)?;
    if clustering.n_sensors() != pmf.n_sensors() {
        return Err(Error::DimensionMismatch(format!(
            "clustering covers {} sensor(s), pmf has N={}",
            clustering.n_sensors(),
            pmf.n_sensors()
        )));
    }
    let failure: f64 = clustering
        .clusters()
        .iter()
        .map(|c| graph_cost(c, &graph))
        .sum();
    Ok(1.0 - failure)
}

/// Divisive clustering into at most `k` clusters with the default rule.
pub fn diana_partition(pmf: &ActivationPmf, k: usize, channels: usize) -> Result<Clustering> {
    diana_partition_with(pmf, k, channels, SplitRule::default())
}

pub fn diana_partition_with(
    pmf: &ActivationPmf,
    k: usize,
    channels: usize,
    rule: SplitRule,
) -> Result<Clustering> {
    check_channels(channels)?;
    if k == 0 || k > move_count(channels) {
        return Err(Error::InvalidConfig(format!(
            "cluster count {k} must be between 1 and 2^M = {}",
            move_count(channels)
        )));
    }
    let graph = build_conflict_graph(pmf)?;
    let mut clusters: Vec<Vec<usize>> = vec![(0..pmf.n_sensors()).collect()];

    while clusters.len() < k {
        let (target, cost) = clusters
            .iter()
            .map(|c| graph_cost(c, &graph))
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, c)| {
                if c > best.1 {
                    (i, c)
                } else {
                    best
                }
            });
        if cost <= 0.0 {
            break;
        }
        let (old, new) = split(&clusters[target], &graph, rule);
        clusters[target] = old;
        clusters.push(new);
    }

    // Costliest cluster gets code 1, the next code 2, ...; the cheapest gets
    // silence.
    let mut ranked: Vec<(usize, f64)> = clusters
        .iter()
        .enumerate()
        .map(|(i, c)| (i, graph_cost(c, &graph)))
        .collect();
    ranked.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| clusters[a.0][0].cmp(&clusters[b.0][0]))
    });
    let mut codes = vec![0u32; clusters.len()];
    let last = ranked.len() - 1;
    for (rank, &(i, _)) in ranked.iter().enumerate() {
        codes[i] = if rank == last { 0 } else { rank as u32 + 1 };
    }
    let moves = codes
        .iter()
        .map(|&c| ChannelMove::new(c, channels))
        .collect::<Result<Vec<_>>>()?;

    let mut paired: Vec<(Vec<usize>, ChannelMove)> = clusters.into_iter().zip(moves).collect();
    paired.sort_by_key(|(c, _)| c[0]);
    let (clusters, moves) = paired.into_iter().unzip();
    Clustering::new(pmf.n_sensors(), clusters, moves)
}

/// Splits `cluster` (sorted) into `(old, new)`.
fn split(cluster: &[usize], graph: &ConflictGraph, rule: SplitRule) -> (Vec<usize>, Vec<usize>) {
    let splinter = cluster
        .iter()
        .map(|&u| (u, graph.weight_to(u, cluster)))
        .fold((cluster[0], f64::NEG_INFINITY), |best, (u, w)| {
            if w > best.1 {
                (u, w)
            } else {
                best
            }
        })
        .0;
    let mut new = vec![splinter];
    let mut old: Vec<usize> = cluster.iter().copied().filter(|&u| u != splinter).collect();

    match rule {
        SplitRule::TotalCost => {
            for u in old.clone() {
                let to_new = graph.weight_to(u, &new);
                let to_old = graph.weight_to(u, &old);
                if to_new < to_old {
                    old.retain(|&v| v != u);
                    new.push(u);
                }
            }
        }
        SplitRule::AverageCost => loop {
            if old.len() < 2 {
                break;
            }
            let best = old
                .iter()
                .map(|&u| {
                    let avg_old = graph.weight_to(u, &old) / (old.len() - 1) as f64;
                    let avg_new = graph.weight_to(u, &new) / new.len() as f64;
                    (u, avg_old - avg_new)
                })
                .fold((usize::MAX, 0.0), |best, (u, gap)| {
                    if gap > best.1 {
                        (u, gap)
                    } else {
                        best
                    }
                });
            if best.0 == usize::MAX {
                break;
            }
            old.retain(|&v| v != best.0);
            new.push(best.0);
        },
    }
    new.sort_unstable();
    (old, new)
}

/// Sequential heuristic for arbitrary set sizes.
///
/// Sensors are ordered by descending marginal activation probability
/// (ascending index on ties). Each one, in turn, takes the move that
/// maximizes the success probability when every sensor not yet assigned is
/// silent; ties go to the smallest move code.
pub fn greedy_assign(pmf: &ActivationPmf, channels: usize) -> Result<DeterministicStrategy> {
    check_channels(channels)?;
    let arms = move_count(channels) as u32;
    // Marginals are sums of floats; snap them to a grid so that equal
    // probabilities compare equal and fall back to index order.
    let mut order: Vec<(i64, usize)> = pmf
        .marginals()
        .iter()
        .enumerate()
        .map(|(n, p)| (-(p / VALUE_EPS).round() as i64, n))
        .collect();
    order.sort_unstable();

    let mut codes = vec![0u32; pmf.n_sensors()];
    for (_, sensor) in order {
        let mut best = (0u32, f64::NEG_INFINITY);
        for code in 0..arms {
            codes[sensor] = code;
            let v = value_of_codes(&codes, pmf);
            if v > best.1 + VALUE_EPS {
                best = (code, v);
            }
        }
        codes[sensor] = best.0;
    }
    DeterministicStrategy::from_codes(&codes, channels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::{make_deterministic_partition, make_regular_circle};
    use crate::model::{expected_success_deterministic, ActiveSet};

    #[test]
    fn cost_examples() {
        let pairs = make_deterministic_partition(10, 2).unwrap();
        assert_eq!(cluster_cost(&[4], &pairs).unwrap(), 0.0);
        assert_eq!(cluster_cost(&[0, 1], &pairs).unwrap(), 0.2);
        let regular = make_regular_circle(10, 2).unwrap();
        let c = cluster_cost(&[0, 1, 2], &regular).unwrap();
        assert!((c - 0.135).abs() < 1e-15, "{c}");
        let triples = make_deterministic_partition(9, 3).unwrap();
        assert!(cluster_cost(&[0], &triples).is_err());
    }

    #[test]
    fn pairing_split_separates_partners() {
        let pmf = make_deterministic_partition(10, 2).unwrap();
        for rule in [SplitRule::TotalCost, SplitRule::AverageCost] {
            let cl = diana_partition_with(&pmf, 4, 2, rule).unwrap();
            assert_eq!(clustering_value(&cl, &pmf).unwrap(), 1.0, "{rule:?}");
            for c in cl.clusters() {
                assert_eq!(cluster_cost(c, &pmf).unwrap(), 0.0);
            }
            let v = expected_success_deterministic(&cl.strategy(), &pmf).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_cluster() {
        let pmf = make_regular_circle(10, 2).unwrap();
        let cl = diana_partition(&pmf, 1, 2).unwrap();
        assert_eq!(cl.clusters().len(), 1);
        assert_eq!(cl.moves()[0].code(), 0);
        assert!(clustering_value(&cl, &pmf).unwrap().abs() < 1e-12);
    }

    #[test]
    fn cluster_count_bounds() {
        let pmf = make_regular_circle(10, 2).unwrap();
        assert!(diana_partition(&pmf, 5, 2).is_err());
        assert!(diana_partition(&pmf, 0, 2).is_err());
        let cl = diana_partition(&pmf, 4, 2).unwrap();
        assert!(cl.clusters().len() <= 4);
    }

    #[test]
    fn silence_goes_to_cheapest_cluster() {
        let pmf = make_regular_circle(10, 2).unwrap();
        let cl = diana_partition(&pmf, 4, 2).unwrap();
        let costs: Vec<f64> = cl
            .clusters()
            .iter()
            .map(|c| cluster_cost(c, &pmf).unwrap())
            .collect();
        let silent = cl.moves().iter().position(|m| m.is_silent()).unwrap();
        assert!(costs.iter().all(|&c| c >= costs[silent]));
    }

    #[test]
    fn clustering_validation() {
        let mv = |c| ChannelMove::new(c, 1).unwrap();
        assert!(Clustering::new(3, vec![vec![0, 1], vec![2]], vec![mv(0), mv(1)]).is_ok());
        assert!(Clustering::new(3, vec![vec![0, 1], vec![1, 2]], vec![mv(0), mv(1)]).is_err());
        assert!(Clustering::new(3, vec![vec![0, 1]], vec![mv(0)]).is_err());
        assert!(Clustering::new(3, vec![vec![0, 1], vec![2]], vec![mv(1), mv(1)]).is_err());
        let cl = Clustering::new(
            3,
            vec![vec![2, 0], vec![], vec![1]],
            vec![
                ChannelMove::new(0, 2).unwrap(),
                ChannelMove::new(1, 2).unwrap(),
                ChannelMove::new(2, 2).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(cl.clusters(), &[vec![0, 2], vec![1]]);
        assert_eq!(cl.strategy().codes(), vec![0, 2, 0]);
    }

    #[test]
    fn greedy_lone_sensor_transmits() {
        let pmf = ActivationPmf::new(1, vec![(ActiveSet::new(vec![0]).unwrap(), 1.0)]).unwrap();
        let s = greedy_assign(&pmf, 2).unwrap();
        assert_eq!(s.codes(), vec![1]);
        assert_eq!(expected_success_deterministic(&s, &pmf).unwrap(), 1.0);
    }

    #[test]
    fn greedy_pairing_reaches_one() {
        let pmf = make_deterministic_partition(10, 2).unwrap();
        let s = greedy_assign(&pmf, 2).unwrap();
        let v = expected_success_deterministic(&s, &pmf).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(s.codes(), vec![1, 0, 1, 0, 1, 0, 1, 0, 1, 0]);
    }
}
