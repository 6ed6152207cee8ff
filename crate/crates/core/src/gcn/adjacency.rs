use ndarray::Array2;

use crate::graph::Graph;

/// Sparse `D̃^{-1/2} (A + I) D̃^{-1/2}` in CSR form, where `D̃` is the degree
/// matrix of `A + I`. Rows hold the diagonal entry plus one entry per
/// neighbor, columns ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    /// Entries of `A + I` (edge weights and 1 on the diagonal).
    raw: Vec<f64>,
    /// Normalized entries.
    values: Vec<f64>,
    /// Row sums of `A + I`.
    degrees: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn new(g: &Graph) -> Self {
        let entries: Vec<(usize, usize, f64)> = g.edges().iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Self::from_weighted(g.n(), &entries)
    }

    /// Operator for a symmetric weighted adjacency given by undirected
    /// entries `(u, v, w)` with `u != v`, each listed once.
    pub fn from_weighted(n: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| vec![(i, 1.0)]).collect();
        for &(u, v, w) in entries {
            rows[u].push((v, w));
            rows[v].push((u, w));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut raw = Vec::new();
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_by_key(|&(c, _)| c);
            for &(c, w) in row.iter() {
                cols.push(c);
                raw.push(w);
            }
            row_ptr.push(cols.len());
        }
        let degrees: Vec<f64> = (0..n)
            .map(|i| raw[row_ptr[i]..row_ptr[i + 1]].iter().sum())
            .collect();
        let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
        let mut values = vec![0.0; raw.len()];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                values[k] = raw[k] * inv_sqrt[i] * inv_sqrt[cols[k]];
            }
        }
        NormalizedAdjacency {
            n,
            row_ptr,
            cols,
            raw,
            values,
            degrees,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Iterates `(row, col, value)` over stored entries.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.cols[k], self.values[k]))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j)
            .map(|k| self.values[self.row_ptr[i] + k])
            .unwrap_or(0.0)
    }

    /// `Â · m`. Rows are reduced in stored column order.
    pub fn apply(&self, m: &Array2<f64>) -> Array2<f64> {
        assert_eq!(m.nrows(), self.n, "operator/matrix row mismatch");
        let mut out = Array2::zeros((self.n, m.ncols()));
        for i in 0..self.n {
            let mut row = out.row_mut(i);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row.scaled_add(self.values[k], &m.row(self.cols[k]));
            }
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut d = Array2::zeros((self.n, self.n));
        for (i, j, v) in self.entries() {
            d[[i, j]] = v;
        }
        d
    }

    /// Chains `∂F/∂Â_ij` (given per stored entry, in [`entries`] order)
    /// through the degree normalization to `∂F/∂w_uv` for each undirected
    /// off-diagonal weight. Returns `((u, v), gradient)` with `u < v`.
    ///
    /// [`entries`]: Self::entries
    pub fn weight_gradients(&self, d_values: &[f64]) -> Vec<((usize, usize), f64)> {
        assert_eq!(d_values.len(), self.nnz());
        // ∂F/∂d_k = -1/(2 d_k) * (Σ_j S_kj Â_kj + Σ_i S_ik Â_ik)
        let mut d_degree = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let t = d_values[k] * self.values[k];
                d_degree[i] += t;
                d_degree[self.cols[k]] += t;
            }
        }
        for (g, d) in d_degree.iter_mut().zip(&self.degrees) {
            *g *= -0.5 / d;
        }
        let mut out = Vec::new();
        for u in 0..self.n {
            for k in self.row_ptr[u]..self.row_ptr[u + 1] {
                let v = self.cols[k];
                if v <= u {
                    continue;
                }
                let scale = 1.0 / (self.degrees[u] * self.degrees[v]).sqrt();
                let row_v = &self.cols[self.row_ptr[v]..self.row_ptr[v + 1]];
                let kv = self.row_ptr[v] + row_v.binary_search(&u).expect("symmetric pattern");
                let direct = (d_values[k] + d_values[kv]) * scale;
                out.push(((u, v), direct + d_degree[u] + d_degree[v]));
            }
        }
        out
    }
}
