//! Undirected simple contact graphs.
//!
//! Nodes are dense ids `0..n`. Edges are stored once as `(u, v)` with
//! `u < v`, sorted, alongside sorted adjacency lists.

mod components;
mod generators;
pub mod io;

pub use components::{connected_components, Components};
pub use generators::{generate_er, generate_rgg, generate_sbm, SbmSpec};

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
    positions: Option<Vec<[f64; 2]>>,
}

impl Graph {
    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
            positions: None,
        }
    }

    /// Builds a graph from an edge list, rejecting self-loops, duplicates
    /// (in either orientation) and out-of-range endpoints.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut list = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) has an endpoint outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on node {a}")));
            }
            list.push((a.min(b), a.max(b)));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(Self::from_sorted_unique(n, list))
    }

    /// Caller guarantees `edges` is sorted, unique, in range and has `u < v`.
    pub(crate) fn from_sorted_unique(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Graph {
            n,
            edges,
            adj,
            positions: None,
        }
    }

    /// Attaches 2-D node positions; every coordinate must lie in `[0, 1]`.
    pub fn with_positions(mut self, positions: Vec<[f64; 2]>) -> Result<Self> {
        if positions.len() != self.n {
            return Err(Error::InvalidGraph(format!(
                "{} positions for {} nodes",
                positions.len(),
                self.n
            )));
        }
        if let Some((i, p)) = positions
            .iter()
            .enumerate()
            .find(|(_, p)| !p.iter().all(|c| (0.0..=1.0).contains(c)))
        {
            return Err(Error::InvalidGraph(format!(
                "position of node {i} ({}, {}) is outside the unit square",
                p[0], p[1]
            )));
        }
        self.positions = Some(positions);
        Ok(self)
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        Self::from_sorted_unique(n, edges)
    }

    pub fn path(n: usize) -> Self {
        let edges = (1..n).map(|v| (v - 1, v)).collect();
        Self::from_sorted_unique(n, edges)
    }

    /// Star with center 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        let edges = (1..=leaves).map(|v| (0, v)).collect();
        Self::from_sorted_unique(leaves + 1, edges)
    }

    /// Two `K_clique` cliques joined by a path through `bridge` extra nodes.
    ///
    /// Left clique is `0..clique`, bridge nodes follow, the right clique
    /// takes the last `clique` ids. Node `clique - 1` and node
    /// `clique + bridge` are the attachment points.
    pub fn barbell(clique: usize, bridge: usize) -> Self {
        let n = 2 * clique + bridge;
        let mut edges = Vec::new();
        let right = clique + bridge;
        for u in 0..clique {
            for v in u + 1..clique {
                edges.push((u, v));
                edges.push((right + u, right + v));
            }
        }
        if clique > 0 {
            let mut prev = clique - 1;
            for b in clique..right {
                edges.push((prev, b));
                prev = b;
            }
            edges.push((prev, right));
        }
        edges.sort_unstable();
        edges.dedup();
        Self::from_sorted_unique(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(u, v)` with `u < v`, ascending.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn degree_of(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.adj[u].binary_search(&v).is_ok()
    }

    pub fn positions(&self) -> Option<&[[f64; 2]]> {
        self.positions.as_deref()
    }

    /// Copy of the graph with edge `{u, v}` removed. Positions are kept.
    pub fn without_edge(&self, u: usize, v: usize) -> Result<Graph> {
        let key = (u.min(v), u.max(v));
        let idx = self
            .edges
            .binary_search(&key)
            .map_err(|_| Error::InvalidGraph(format!("edge ({}, {}) not in graph", key.0, key.1)))?;
        let mut edges = self.edges.clone();
        edges.remove(idx);
        let mut g = Self::from_sorted_unique(self.n, edges);
        g.positions = self.positions.clone();
        Ok(g)
    }

    /// Copy of the graph with extra edges added; existing edges are ignored.
    pub fn with_added_edges(&self, extra: &[(usize, usize)]) -> Result<Graph> {
        let mut edges = self.edges.clone();
        for &(a, b) in extra {
            if a >= self.n || b >= self.n || a == b {
                return Err(Error::InvalidGraph(format!("cannot add edge ({a}, {b})")));
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        edges.dedup();
        let mut g = Self::from_sorted_unique(self.n, edges);
        g.positions = self.positions.clone();
        Ok(g)
    }

    /// Unweighted hop distances from `source`; `None` for unreachable nodes.
    pub fn bfs_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}
