use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};

/// Stochastic block model parameters. Blocks occupy contiguous id ranges,
/// block 0 first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub block_sizes: Vec<usize>,
    pub block_probs: Vec<Vec<f64>>,
}

impl SbmSpec {
    pub fn n(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.block_sizes.len();
        if k == 0 {
            return Err(Error::param("SBM needs at least one block"));
        }
        if let Some(b) = self.block_sizes.iter().position(|&s| s == 0) {
            return Err(Error::param(format!("SBM block {b} is empty")));
        }
        if self.block_probs.len() != k || self.block_probs.iter().any(|row| row.len() != k) {
            return Err(Error::param(format!("SBM block_probs must be {k}x{k}")));
        }
        for a in 0..k {
            for b in 0..k {
                let p = self.block_probs[a][b];
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::param(format!(
                        "SBM block_probs[{a}][{b}] = {p} is not a probability"
                    )));
                }
                if p != self.block_probs[b][a] {
                    return Err(Error::param(format!(
                        "SBM block_probs is asymmetric at ({a}, {b})"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param(format!("{name} = {p} is not in [0, 1]")))
    }
}

/// Calls `emit(k)` for every index `k` in `0..total` independently with
/// probability `p`, jumping over gaps with geometric skips.
fn bernoulli_indices(total: u64, p: f64, rng: &mut SimRng, mut emit: impl FnMut(u64)) {
    if total == 0 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        (0..total).for_each(emit);
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut next = 0u64;
    loop {
        let u: f64 = rng.random();
        let skip = ((1.0 - u).ln() / log_q).floor();
        if skip >= (total - next) as f64 {
            return;
        }
        next += skip as u64;
        emit(next);
        next += 1;
        if next >= total {
            return;
        }
    }
}

/// Unranks a monotone stream of indices into pairs `(i, j)`, `i < j < size`,
/// ordered row by row.
struct PairCursor {
    size: u64,
    row: u64,
    row_start: u64,
}

impl PairCursor {
    fn new(size: usize) -> Self {
        PairCursor {
            size: size as u64,
            row: 0,
            row_start: 0,
        }
    }

    fn pair(&mut self, k: u64) -> (usize, usize) {
        while k >= self.row_start + (self.size - 1 - self.row) {
            self.row_start += self.size - 1 - self.row;
            self.row += 1;
        }
        let j = self.row + 1 + (k - self.row_start);
        (self.row as usize, j as usize)
    }
}

fn pair_count(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

/// Erdős–Rényi G(n, p).
pub fn generate_er(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::param("ER graph needs n >= 1"));
    }
    check_probability("p", p)?;
    let mut rng = rng_from_seed(seed);
    let mut cursor = PairCursor::new(n);
    let mut edges = Vec::new();
    bernoulli_indices(pair_count(n), p, &mut rng, |k| edges.push(cursor.pair(k)));
    Ok(Graph::from_sorted_unique(n, edges))
}

/// Stochastic block model: block pairs are sampled in row-major order
/// `(a, b)` with `a <= b`, all from one seeded stream.
pub fn generate_sbm(spec: &SbmSpec, seed: u64) -> Result<Graph> {
    spec.validate()?;
    let n = spec.n();
    let offsets: Vec<usize> = spec
        .block_sizes
        .iter()
        .scan(0, |acc, &s| {
            let start = *acc;
            *acc += s;
            Some(start)
        })
        .collect();
    let mut rng = rng_from_seed(seed);
    let mut edges = Vec::new();
    let k = spec.block_sizes.len();
    for a in 0..k {
        let (oa, sa) = (offsets[a], spec.block_sizes[a]);
        let mut cursor = PairCursor::new(sa);
        bernoulli_indices(pair_count(sa), spec.block_probs[a][a], &mut rng, |idx| {
            let (i, j) = cursor.pair(idx);
            edges.push((oa + i, oa + j));
        });
        for (b, &ob) in offsets.iter().enumerate().skip(a + 1) {
            let sb = spec.block_sizes[b];
            let total = (sa * sb) as u64;
            bernoulli_indices(total, spec.block_probs[a][b], &mut rng, |idx| {
                let i = (idx / sb as u64) as usize;
                let j = (idx % sb as u64) as usize;
                edges.push((oa + i, ob + j));
            });
        }
    }
    edges.sort_unstable();
    Ok(Graph::from_sorted_unique(n, edges))
}

/// Random geometric graph on the unit square (no wraparound): positions are
/// drawn `x` then `y` per node, and `u ~ v` iff their distance is `< r`.
pub fn generate_rgg(n: usize, r: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::param("RGG needs n >= 1"));
    }
    if r.is_nan() || r < 0.0 {
        return Err(Error::param(format!("RGG radius {r} must be >= 0")));
    }
    let mut rng = rng_from_seed(seed);
    let positions: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            let x: f64 = rng.random();
            let y: f64 = rng.random();
            [x, y]
        })
        .collect();
    let r2 = r * r;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let dx = positions[u][0] - positions[v][0];
            let dy = positions[u][1] - positions[v][1];
            if dx * dx + dy * dy < r2 {
                edges.push((u, v));
            }
        }
    }
    Graph::from_sorted_unique(n, edges).with_positions(positions)
}
