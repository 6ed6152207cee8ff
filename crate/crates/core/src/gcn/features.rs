//! Node features and the one-step-ahead snapshot dataset.
//!
//! Each node's feature row at time `t` is
//! `[deg/(n-1), normalized betweenness, one-hot(state_t) (5), fraction of
//! neighbors infectious at t]`; the label is its state at `t + 1`.

use ndarray::Array2;
use rand::seq::SliceRandom;

use super::NormalizedAdjacency;
use crate::centrality::betweenness_normalized;
use crate::epidemic::{NodeState, SimulationTrace};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::rng_from_seed;

pub const FEATURE_DIM: usize = 8;
pub const NUM_CLASSES: usize = 5;

pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "degree",
    "betweenness",
    "state_S",
    "state_I",
    "state_R",
    "state_V",
    "state_D",
    "infected_neighbor_fraction",
];

/// Time-invariant structural features of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralFeatures {
    pub degree: Vec<f64>,
    pub betweenness: Vec<f64>,
}

impl StructuralFeatures {
    pub fn new(g: &Graph) -> Self {
        let n = g.n();
        let denom = n.saturating_sub(1) as f64;
        let degree = (0..n)
            .map(|u| if denom > 0.0 { g.degree_of(u) as f64 / denom } else { 0.0 })
            .collect();
        StructuralFeatures {
            degree,
            betweenness: betweenness_normalized(g).values,
        }
    }
}

/// Feature matrix (`n × FEATURE_DIM`) for one network state.
pub fn node_features(g: &Graph, structural: &StructuralFeatures, state: &[NodeState]) -> Array2<f64> {
    let n = g.n();
    let mut x = Array2::zeros((n, FEATURE_DIM));
    for u in 0..n {
        x[[u, 0]] = structural.degree[u];
        x[[u, 1]] = structural.betweenness[u];
        x[[u, 2 + state[u].index()]] = 1.0;
        let nbrs = g.neighbors(u);
        if !nbrs.is_empty() {
            let infected = nbrs.iter().filter(|&&v| state[v] == NodeState::I).count();
            x[[u, 7]] = infected as f64 / nbrs.len() as f64;
        }
    }
    x
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub features: Array2<f64>,
    /// Class index of every node at the next step.
    pub labels: Vec<usize>,
    pub graph_id: usize,
    /// Replica and time step the snapshot came from.
    pub source: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct SnapshotDataset {
    pub graphs: Vec<Graph>,
    pub operators: Vec<NormalizedAdjacency>,
    pub snapshots: Vec<Snapshot>,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

impl SnapshotDataset {
    /// One snapshot per recorded transition `t -> t + 1` of every trace, at
    /// most `max_snapshots` of them taken in replica/time order. Snapshots
    /// are shuffled with `seed` and the first
    /// `round(validation_fraction * count)` go to validation, keeping at
    /// least one for training.
    pub fn from_traces(
        g: &Graph,
        traces: &[SimulationTrace],
        validation_fraction: f64,
        max_snapshots: Option<usize>,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&validation_fraction) {
            return Err(Error::param(format!(
                "validation_fraction {validation_fraction} must be in [0, 1)"
            )));
        }
        let structural = StructuralFeatures::new(g);
        let mut snapshots = Vec::new();
        let cap = max_snapshots.unwrap_or(usize::MAX);
        'outer: for (r, trace) in traces.iter().enumerate() {
            if trace.n() != g.n() {
                return Err(Error::Shape(format!(
                    "trace {r} has {} nodes, graph has {}",
                    trace.n(),
                    g.n()
                )));
            }
            for (t, pair) in trace.node_history.windows(2).enumerate() {
                if snapshots.len() >= cap {
                    break 'outer;
                }
                snapshots.push(Snapshot {
                    features: node_features(g, &structural, &pair[0]),
                    labels: pair[1].iter().map(|s| s.index()).collect(),
                    graph_id: 0,
                    source: (r, t),
                });
            }
        }
        if snapshots.is_empty() {
            return Err(Error::param("traces contain no transitions to learn from"));
        }
        let mut order: Vec<usize> = (0..snapshots.len()).collect();
        order.shuffle(&mut rng_from_seed(seed));
        let mut n_val = (validation_fraction * snapshots.len() as f64 + 0.5).floor() as usize;
        n_val = n_val.min(snapshots.len() - 1);
        let mut validation = order[..n_val].to_vec();
        let mut train = order[n_val..].to_vec();
        validation.sort_unstable();
        train.sort_unstable();
        Ok(SnapshotDataset {
            graphs: vec![g.clone()],
            operators: vec![NormalizedAdjacency::new(g)],
            snapshots,
            train,
            validation,
        })
    }

    pub fn operator(&self, snapshot: &Snapshot) -> &NormalizedAdjacency {
        &self.operators[snapshot.graph_id]
    }

    /// Label counts over the given snapshot indices.
    pub fn class_counts(&self, indices: &[usize]) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for &i in indices {
            for &y in &self.snapshots[i].labels {
                counts[y] += 1;
            }
        }
        counts
    }

    /// Inverse-frequency weights `N / (K · N_c)` over the `K` classes present
    /// in the training split; absent classes get 0.
    pub fn inverse_frequency_weights(&self) -> [f64; NUM_CLASSES] {
        let counts = self.class_counts(&self.train);
        let total: usize = counts.iter().sum();
        let present = counts.iter().filter(|&&c| c > 0).count();
        counts.map(|c| {
            if c == 0 {
                0.0
            } else {
                total as f64 / (present as f64 * c as f64)
            }
        })
    }

    /// Accuracy of always predicting the most frequent class of `indices`.
    pub fn majority_baseline(&self, indices: &[usize]) -> f64 {
        let counts = self.class_counts(indices);
        let total: usize = counts.iter().sum();
        if total == 0 {
            return 0.0;
        }
        *counts.iter().max().unwrap_or(&0) as f64 / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epidemic::{init_state, run, EpidemicParams};

    #[test]
    fn feature_rows_follow_schema() {
        let g = Graph::star(3);
        let s = StructuralFeatures::new(&g);
        let state = [NodeState::I, NodeState::S, NodeState::V, NodeState::D];
        let x = node_features(&g, &s, &state);
        assert_eq!(x.shape(), &[4, FEATURE_DIM]);
        assert_eq!(x.row(0).to_vec(), vec![1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(x.row(1).to_vec(), vec![1.0 / 3.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        for row in x.rows() {
            assert_eq!(row.slice(ndarray::s![2..7]).sum(), 1.0);
            assert!((0.0..=1.0).contains(&row[7]));
        }
    }

    #[test]
    fn isolated_node_features_are_finite() {
        let g = Graph::empty(1);
        let x = node_features(&g, &StructuralFeatures::new(&g), &[NodeState::S]);
        assert!(x.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn dataset_from_deterministic_k10() {
        let g = Graph::complete(10);
        let p = EpidemicParams { beta_u: 1.0, gamma: 1.0, ..Default::default() };
        let init = init_state(&g, &[0], &[]).unwrap();
        let traces: Vec<_> = (0..5).map(|s| run(&g, &p, &init, 10, s).unwrap()).collect();
        let ds = SnapshotDataset::from_traces(&g, &traces, 0.2, None, 1).unwrap();
        assert_eq!(ds.snapshots.len(), 10);
        assert_eq!(ds.validation.len(), 2);
        assert_eq!(ds.train.len(), 8);
        let all: Vec<usize> = (0..10).collect();
        // 9 I + 1 R after the first step, 10 R after the second.
        assert_eq!(ds.class_counts(&all), [0, 45, 55, 0, 0]);
        assert!((ds.majority_baseline(&all) - 0.55).abs() < 1e-12);
        let w = ds.inverse_frequency_weights();
        assert_eq!(w[0], 0.0);
        assert!(w[1] > 0.0 && w[2] > 0.0);
    }

    #[test]
    fn dataset_respects_cap_and_rejects_empty() {
        let g = Graph::complete(4);
        let p = EpidemicParams { beta_u: 0.5, gamma: 0.2, ..Default::default() };
        let init = init_state(&g, &[0], &[]).unwrap();
        let traces: Vec<_> = (0..3).map(|s| run(&g, &p, &init, 20, s).unwrap()).collect();
        let ds = SnapshotDataset::from_traces(&g, &traces, 0.25, Some(4), 0).unwrap();
        assert_eq!(ds.snapshots.len(), 4);
        let frozen = run(&g, &EpidemicParams::default(), &[NodeState::S; 4], 5, 0).unwrap();
        assert!(SnapshotDataset::from_traces(&g, &[frozen], 0.2, None, 0).is_err());
        assert!(SnapshotDataset::from_traces(&g, &traces, 1.0, None, 0).is_err());
    }
}
