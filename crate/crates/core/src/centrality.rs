//! Node centrality scores.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentralityKind {
    Betweenness,
    Degree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityScores {
    pub kind: CentralityKind,
    pub values: Vec<f64>,
}

impl CentralityScores {
    /// Node ids ordered by descending score, ties by ascending id.
    pub fn ranking(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.values.len()).collect();
        ids.sort_by(|&a, &b| self.values[b].total_cmp(&self.values[a]).then(a.cmp(&b)));
        ids
    }
}

/// Unnormalized shortest-path betweenness (Brandes), each unordered
/// source/target pair counted once. Sources are accumulated in ascending
/// id order.
pub fn betweenness(g: &Graph) -> CentralityScores {
    let n = g.n();
    let mut scores = vec![0.0; n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0f64; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::with_capacity(n);

    for s in 0..n {
        sigma.fill(0.0);
        dist.fill(usize::MAX);
        delta.fill(0.0);
        order.clear();

        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in g.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                }
            }
        }
        // Predecessors of w are exactly the neighbors one hop closer to s.
        for &w in order.iter().rev() {
            for &v in g.neighbors(w) {
                if dist[v] != usize::MAX && dist[v] + 1 == dist[w] {
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
                }
            }
            if w != s {
                scores[w] += delta[w];
            }
        }
    }
    for x in &mut scores {
        *x /= 2.0;
    }
    CentralityScores {
        kind: CentralityKind::Betweenness,
        values: scores,
    }
}

/// Betweenness divided by `C(n-1, 2)`, the number of pairs not involving a
/// given node. All zero for `n <= 2`.
pub fn betweenness_normalized(g: &Graph) -> CentralityScores {
    let mut b = betweenness(g);
    let n = g.n() as f64;
    let pairs = (n - 1.0) * (n - 2.0) / 2.0;
    for x in &mut b.values {
        *x = if pairs > 0.0 { *x / pairs } else { 0.0 };
    }
    b
}

pub fn degree(g: &Graph) -> CentralityScores {
    CentralityScores {
        kind: CentralityKind::Degree,
        values: (0..g.n()).map(|u| g.degree_of(u) as f64).collect(),
    }
}

pub fn centrality(g: &Graph, kind: CentralityKind) -> CentralityScores {
    match kind {
        CentralityKind::Betweenness => betweenness(g),
        CentralityKind::Degree => degree(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_er;
    use proptest::prelude::*;

    #[test]
    fn path_and_star() {
        assert_eq!(betweenness(&Graph::path(3)).values, vec![0.0, 1.0, 0.0]);
        assert_eq!(betweenness(&Graph::star(4)).values, vec![6.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn tiny_graphs_score_zero() {
        assert_eq!(betweenness(&Graph::complete(2)).values, vec![0.0, 0.0]);
        assert_eq!(betweenness(&Graph::empty(1)).values, vec![0.0]);
        assert_eq!(betweenness_normalized(&Graph::path(2)).values, vec![0.0, 0.0]);
    }

    #[test]
    fn normalized_star_center_is_one() {
        let b = betweenness_normalized(&Graph::star(4));
        assert_eq!(b.values[0], 1.0);
    }

    #[test]
    fn degree_basics() {
        assert_eq!(degree(&Graph::complete(4)).values, vec![3.0; 4]);
        assert_eq!(degree(&Graph::empty(5)).values, vec![0.0; 5]);
    }

    #[test]
    fn ranking_breaks_ties_by_id() {
        let s = CentralityScores {
            kind: CentralityKind::Degree,
            values: vec![1.0, 3.0, 1.0, 3.0],
        };
        assert_eq!(s.ranking(), vec![1, 3, 0, 2]);
    }

    proptest! {
        #[test]
        fn handshake_lemma(n in 1usize..40, p in 0.0f64..1.0, seed: u64) {
            let g = generate_er(n, p, seed).unwrap();
            let total: f64 = degree(&g).values.iter().sum();
            prop_assert_eq!(total, 2.0 * g.edge_count() as f64);
        }

        /// Every shortest s-t path has d(s,t) - 1 interior nodes, so the
        /// scores sum to the total interior length over connected pairs.
        #[test]
        fn betweenness_sum_counts_interior_nodes(n in 1usize..25, p in 0.0f64..0.5, seed: u64) {
            let g = generate_er(n, p, seed).unwrap();
            let b = betweenness(&g);
            prop_assert!(b.values.iter().all(|&x| x >= 0.0));
            let mut expected = 0.0;
            for s in 0..n {
                let d = g.bfs_distances(s);
                for &dt in &d[s + 1..] {
                    if let Some(k) = dt {
                        expected += (k - 1) as f64;
                    }
                }
            }
            let sum: f64 = b.values.iter().sum();
            prop_assert!((sum - expected).abs() < 1e-9 * expected.max(1.0));
        }
    }
}
