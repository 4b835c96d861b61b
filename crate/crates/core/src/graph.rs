//! Weighted conflict graph for pairwise activation and the coloring view of
//! the problem.
//!
//! When every active set has two members, two sensors fail together exactly
//! when they play the same move: distinct moves always leave a channel with a
//! single transmitter, and equal moves never do. Reading move codes as colors
//! (`k = 2^M`), the failure probability of a strategy equals the weight of
//! its monochromatic edges, with edge weight `w(u, v) = p_A({u, v})`.
//!
//! The quantity minimized over strategies is this failure weight, i.e. the
//! objective carries `1 - success` per pair.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{success_codes, ActivationPmf, DeterministicStrategy};

/// Complete graph on the sensors; only nonzero weights are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictGraph {
    n_vertices: usize,
    weights: BTreeMap<(usize, usize), f64>,
}

impl ConflictGraph {
    /// Builds a graph from explicit edges. Self-loops and negative weights
    /// are rejected; `(u, v)` and `(v, u)` name the same edge.
    pub fn new<I>(n_vertices: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut weights = BTreeMap::new();
        for (u, v, w) in edges {
            if u == v {
                return Err(Error::InvalidConfig(format!("self-loop on vertex {u}")));
            }
            if u >= n_vertices || v >= n_vertices {
                return Err(Error::DimensionMismatch(format!(
                    "edge ({u}, {v}) outside {n_vertices} vertices"
                )));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "edge weight {w} must be nonnegative"
                )));
            }
            if w > 0.0 {
                *weights.entry((u.min(v), u.max(v))).or_insert(0.0) += w;
            }
        }
        Ok(Self {
            n_vertices,
            weights,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.weights
            .get(&(u.min(v), u.max(v)))
            .copied()
            .unwrap_or(0.0)
    }

    /// Nonzero edges as `((u, v), w)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.weights.iter().map(|(&e, &w)| (e, w))
    }

    /// Sum of the weights from `u` to every vertex in `others` (skipping `u`).
    pub fn weight_to(&self, u: usize, others: &[usize]) -> f64 {
        others
            .iter()
            .filter(|&&v| v != u)
            .map(|&v| self.weight(u, v))
            .sum()
    }
}

/// `w(u, v) = p_A({u, v})` for every support pair.
pub fn build_conflict_graph(pmf: &ActivationPmf) -> Result<ConflictGraph> {
    pmf.require_pairwise()?;
    ConflictGraph::new(
        pmf.n_sensors(),
        pmf.support().iter().map(|(set, p)| {
            let m = set.members();
            (m[0], m[1], *p)
        }),
    )
}

/// One color per vertex, each in `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    colors: Vec<u32>,
    k: u32,
}

impl Coloring {
    pub fn new(colors: Vec<u32>, k: u32) -> Result<Self> {
        if let Some(c) = colors.iter().find(|&&c| c >= k) {
            return Err(Error::InvalidConfig(format!("color {c} outside 0..{k}")));
        }
        Ok(Self { colors, k })
    }

    /// Colors are the move codes, `k = 2^M`.
    pub fn from_strategy(strategy: &DeterministicStrategy) -> Self {
        Self {
            colors: strategy.codes(),
            k: 1 << strategy.channels(),
        }
    }

    pub fn colors(&self) -> &[u32] {
        &self.colors
    }

    pub fn k(&self) -> u32 {
        self.k
    }
}

/// Total weight of monochromatic edges, each unordered edge counted once.
pub fn coloring_weight(coloring: &Coloring, graph: &ConflictGraph) -> Result<f64> {
    if coloring.colors.len() != graph.n_vertices() {
        return Err(Error::DimensionMismatch(format!(
            "coloring has {} vertices, graph has {}",
            coloring.colors.len(),
            graph.n_vertices()
        )));
    }
    let c = &coloring.colors;
    let mut total = 0.0;
    for ((u, v), w) in graph.edges() {
        if c[u] == c[v] {
            total += w;
        }
    }
    Ok(total)
}

/// Probability mass of the support pairs on which `strategy` fails.
pub fn strategy_failure_weight(
    strategy: &DeterministicStrategy,
    pmf: &ActivationPmf,
) -> Result<f64> {
    pmf.require_pairwise()?;
    if strategy.n_sensors() != pmf.n_sensors() {
        return Err(Error::DimensionMismatch(format!(
            "strategy covers {} sensor(s), pmf has N={}",
            strategy.n_sensors(),
            pmf.n_sensors()
        )));
    }
    let codes = strategy.codes();
    let mut total = 0.0;
    for (set, p) in pmf.support() {
        if !success_codes(set.members().iter().map(|&s| codes[s])) {
            total += p;
        }
    }
    Ok(total)
}
