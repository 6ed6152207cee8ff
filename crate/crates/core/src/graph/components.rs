use std::collections::VecDeque;

use super::Graph;

/// Connected-component labelling. Components are numbered in order of their
/// smallest node id.
#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    pub labels: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Largest component size divided by `n`; 0 for the empty graph.
    pub fn giant_fraction(&self) -> f64 {
        let n = self.labels.len();
        if n == 0 {
            return 0.0;
        }
        self.sizes.iter().copied().max().unwrap_or(0) as f64 / n as f64
    }
}

pub fn connected_components(g: &Graph) -> Components {
    const UNSEEN: usize = usize::MAX;
    let mut labels = vec![UNSEEN; g.n()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..g.n() {
        if labels[start] != UNSEEN {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        labels[start] = id;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            size += 1;
            for &v in g.neighbors(u) {
                if labels[v] == UNSEEN {
                    labels[v] = id;
                    queue.push_back(v);
                }
            }
        }
        sizes.push(size);
    }
    Components { labels, sizes }
}
