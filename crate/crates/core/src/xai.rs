//! Attributions for classifier outputs and for the diffusion process.
//!
//! Gradient methods explain a single logit `F = logits[node, class]`.
//! Counterfactual edge importance explains the ensemble attack rate.

use std::fmt::{self, Write as _};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::epidemic::{ensemble, EpidemicParams};
use crate::error::{Error, Result};
use crate::gcn::{GcnModel, GradientRequest, NormalizedAdjacency, FEATURE_NAMES};
use crate::graph::Graph;
use crate::interventions::VaccinationStrategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributionMethod {
    Saliency,
    IntegratedGradients,
    Counterfactual,
    AdjacencyGradient,
}

impl AttributionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributionMethod::Saliency => "saliency",
            AttributionMethod::IntegratedGradients => "integrated_gradients",
            AttributionMethod::Counterfactual => "counterfactual",
            AttributionMethod::AdjacencyGradient => "adjacency_gradient",
        }
    }
}

impl fmt::Display for AttributionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttributedItem {
    Feature(usize),
    Edge(usize, usize),
}

impl fmt::Display for AttributedItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AttributedItem::Feature(j) => match FEATURE_NAMES.get(j) {
                Some(name) => f.write_str(name),
                None => write!(f, "feature_{j}"),
            },
            AttributedItem::Edge(u, v) => write!(f, "{}-{}", u.min(v), u.max(v)),
        }
    }
}

/// One attribution score, as exported to CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    pub method: AttributionMethod,
    /// `(node, class)` of the explained logit; `None` for diffusion-level
    /// attributions.
    pub target: Option<(usize, usize)>,
    pub item: AttributedItem,
    pub score: f64,
}

/// `method,target_node,target_class,feature_or_edge,score`; target columns
/// are empty for counterfactual rows.
pub fn attributions_csv(rows: &[Attribution]) -> String {
    let mut out = String::from("method,target_node,target_class,feature_or_edge,score\n");
    for r in rows {
        let (node, class) = match r.target {
            Some((n, c)) => (n.to_string(), c.to_string()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(out, "{},{node},{class},{},{}", r.method, r.item, r.score);
    }
    out
}

pub fn feature_attributions(
    method: AttributionMethod,
    node: usize,
    class: usize,
    scores: &[f64],
) -> Vec<Attribution> {
    scores
        .iter()
        .enumerate()
        .map(|(j, &score)| Attribution {
            method,
            target: Some((node, class)),
            item: AttributedItem::Feature(j),
            score,
        })
        .collect()
}

fn input_gradient(model: &GcnModel, x: &Array2<f64>, a: &NormalizedAdjacency, node: usize, class: usize) -> Result<Array2<f64>> {
    let want = GradientRequest {
        input: true,
        ..Default::default()
    };
    let (_, g) = model.logit_gradient(x, a, node, class, want)?;
    Ok(g.input.expect("input gradient requested"))
}

/// `|∂F/∂X[node, :]|`.
pub fn saliency(model: &GcnModel, x: &Array2<f64>, a: &NormalizedAdjacency, node: usize, class: usize) -> Result<Vec<f64>> {
    let grad = input_gradient(model, x, a, node, class)?;
    Ok(grad.row(node).iter().map(|v| v.abs()).collect())
}

fn check_steps(steps: usize) -> Result<()> {
    if steps == 0 {
        Err(Error::param("integrated gradients needs at least one step"))
    } else {
        Ok(())
    }
}

/// Integrated gradients over the target node's feature row, from
/// `baseline[node]` to `x[node]` with every other row held at `x`. The path
/// integral uses the midpoint rule with `steps` intervals.
pub fn integrated_gradients(
    model: &GcnModel,
    x: &Array2<f64>,
    baseline: &Array2<f64>,
    a: &NormalizedAdjacency,
    node: usize,
    class: usize,
    steps: usize,
) -> Result<Vec<f64>> {
    check_steps(steps)?;
    if x.shape() != baseline.shape() {
        return Err(Error::Shape("input and baseline shapes differ".into()));
    }
    if node >= x.nrows() {
        return Err(Error::param(format!("node {node} is out of range")));
    }
    let target = x.row(node).to_owned();
    let base = baseline.row(node).to_owned();
    let delta = &target - &base;
    let mut total = ndarray::Array1::zeros(x.ncols());
    let mut point = x.clone();
    for i in 0..steps {
        let alpha = (i as f64 + 0.5) / steps as f64;
        point.row_mut(node).assign(&(&base + &(&delta * alpha)));
        let grad = input_gradient(model, &point, a, node, class)?;
        total += &grad.row(node);
    }
    Ok((delta * total / steps as f64).to_vec())
}

/// Integrated gradients along the straight path between whole feature
/// matrices. Returns one attribution per matrix entry.
pub fn integrated_gradients_full(
    model: &GcnModel,
    x: &Array2<f64>,
    baseline: &Array2<f64>,
    a: &NormalizedAdjacency,
    node: usize,
    class: usize,
    steps: usize,
) -> Result<Array2<f64>> {
    check_steps(steps)?;
    if x.shape() != baseline.shape() {
        return Err(Error::Shape("input and baseline shapes differ".into()));
    }
    let delta = x - baseline;
    let mut total = Array2::zeros(x.raw_dim());
    for i in 0..steps {
        let alpha = (i as f64 + 0.5) / steps as f64;
        let point = baseline + &(&delta * alpha);
        total += &input_gradient(model, &point, a, node, class)?;
    }
    Ok(delta * total / steps as f64)
}

/// `|∂F/∂w_uv|` for every edge, where `w_uv` is the symmetric weight of
/// edge `{u, v}` and the degree normalization of `Â` is differentiated too.
pub fn adjacency_gradient_saliency(
    model: &GcnModel,
    x: &Array2<f64>,
    g: &Graph,
    node: usize,
    class: usize,
) -> Result<Vec<((usize, usize), f64)>> {
    let a = NormalizedAdjacency::new(g);
    let want = GradientRequest {
        adjacency: true,
        ..Default::default()
    };
    let (_, grads) = model.logit_gradient(x, &a, node, class, want)?;
    let d_values = grads.adjacency.expect("adjacency gradient requested");
    Ok(a.weight_gradients(&d_values)
        .into_iter()
        .map(|(e, v)| (e, v.abs()))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeImportance {
    pub edge: (usize, usize),
    /// Attack rate with the edge minus attack rate without it.
    pub score: f64,
    pub attack_rate_without: f64,
}

/// Counterfactual importance of each listed edge: the change in mean final
/// attack rate when the edge is removed. Every ensemble reuses the same
/// replica seeds.
#[allow(clippy::too_many_arguments)]
pub fn counterfactual_edge_importance(
    g: &Graph,
    params: &EpidemicParams,
    strategy: &VaccinationStrategy,
    initial_infected: &[usize],
    t_max: usize,
    n_runs: usize,
    root_seed: u64,
    edges: &[(usize, usize)],
) -> Result<(f64, Vec<EdgeImportance>)> {
    for &(u, v) in edges {
        if !g.has_edge(u, v) {
            return Err(Error::InvalidGraph(format!("edge ({u}, {v}) not in graph")));
        }
    }
    let base = ensemble(g, params, strategy, initial_infected, t_max, n_runs, root_seed)?.final_attack_rate;
    let scores = edges
        .par_iter()
        .map(|&(u, v)| {
            let h = g.without_edge(u, v)?;
            let without = ensemble(&h, params, strategy, initial_infected, t_max, n_runs, root_seed)?.final_attack_rate;
            Ok(EdgeImportance {
                edge: (u.min(v), u.max(v)),
                score: base - without,
                attack_rate_without: without,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((base, scores))
}

pub fn edge_attributions(
    method: AttributionMethod,
    target: Option<(usize, usize)>,
    scores: impl IntoIterator<Item = ((usize, usize), f64)>,
) -> Vec<Attribution> {
    scores
        .into_iter()
        .map(|((u, v), score)| Attribution {
            method,
            target,
            item: AttributedItem::Edge(u, v),
            score,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epidemic::init_state;
    use crate::gcn::{Activation, FEATURE_DIM};
    use crate::graph::generate_er;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = rng_from_seed(seed);
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
    }

    fn logit(model: &GcnModel, x: &Array2<f64>, a: &NormalizedAdjacency, node: usize, class: usize) -> f64 {
        model.forward(x, a).unwrap().0[[node, class]]
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
    }

    #[test]
    fn zero_model_explains_nothing() {
        let g = generate_er(8, 0.4, 1).unwrap();
        let a = NormalizedAdjacency::new(&g);
        let model = GcnModel::from_weights(vec![Array2::zeros((FEATURE_DIM, 4)), Array2::zeros((4, 5))], Activation::Relu).unwrap();
        let x = random_matrix(8, FEATURE_DIM, 2);
        assert!(saliency(&model, &x, &a, 3, 1).unwrap().iter().all(|&v| v == 0.0));
        let ig = integrated_gradients(&model, &x, &Array2::zeros(x.raw_dim()), &a, 3, 1, 8).unwrap();
        assert!(ig.iter().all(|&v| v == 0.0));
        assert!(adjacency_gradient_saliency(&model, &x, &g, 3, 1).unwrap().iter().all(|(_, v)| *v == 0.0));
    }

    fn linear_model() -> (GcnModel, Array2<f64>) {
        // Non-negative weights and inputs keep every hidden unit active.
        let w0 = Array2::from_shape_fn((FEATURE_DIM, 3), |(i, j)| 0.1 + 0.05 * (i + 2 * j) as f64);
        let w1 = Array2::from_shape_fn((3, 5), |(i, j)| 0.2 * (i as f64 + 1.0) - 0.15 * j as f64);
        let x = Array2::from_shape_fn((1, FEATURE_DIM), |(_, j)| 0.1 * (j + 1) as f64);
        (GcnModel::from_weights(vec![w0, w1], Activation::Relu).unwrap(), x)
    }

    #[test]
    fn linear_saliency_and_ig_are_exact() {
        let (model, x) = linear_model();
        let a = NormalizedAdjacency::new(&Graph::empty(1));
        let w = model.weights[0].dot(&model.weights[1]);
        let class = 2;
        let s = saliency(&model, &x, &a, 0, class).unwrap();
        for j in 0..FEATURE_DIM {
            assert!((s[j] - w[[j, class]].abs()).abs() < 1e-15);
        }
        for steps in [1, 3, 16] {
            let ig = integrated_gradients(&model, &x, &Array2::zeros(x.raw_dim()), &a, 0, class, steps).unwrap();
            for j in 0..FEATURE_DIM {
                assert!((ig[j] - w[[j, class]] * x[[0, j]]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ig_with_baseline_equal_to_input_is_zero() {
        let g = generate_er(10, 0.3, 5).unwrap();
        let a = NormalizedAdjacency::new(&g);
        let model = GcnModel::init(FEATURE_DIM, 6, 2, 0.5, Activation::Relu, 1).unwrap();
        let x = random_matrix(10, FEATURE_DIM, 4);
        assert!(integrated_gradients(&model, &x, &x, &a, 2, 0, 10).unwrap().iter().all(|&v| v == 0.0));
        assert!(integrated_gradients(&model, &x, &x, &a, 2, 0, 0).is_err());
    }

    #[test]
    fn ig_completeness_improves_with_steps() {
        // ReLU kinks make the midpoint error non-monotone in m for some
        // instances; this one is fixed.
        let g = generate_er(12, 0.3, 6).unwrap();
        let a = NormalizedAdjacency::new(&g);
        let model = GcnModel::init(FEATURE_DIM, 8, 2, 0.6, Activation::Relu, 3).unwrap();
        let x = random_matrix(12, FEATURE_DIM, 13);
        let baseline = {
            let mut b = x.clone();
            b.row_mut(4).fill(0.0);
            b
        };
        let gap = logit(&model, &x, &a, 4, 1) - logit(&model, &baseline, &a, 4, 1);
        let mut last = f64::INFINITY;
        for steps in [8, 32, 128] {
            let ig = integrated_gradients(&model, &x, &Array2::zeros(x.raw_dim()), &a, 4, 1, steps).unwrap();
            let err = (ig.iter().sum::<f64>() - gap).abs();
            assert!(err <= last, "error grew to {err} at m={steps}");
            last = err;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn full_path_ig_is_complete() {
        let g = generate_er(9, 0.4, 2).unwrap();
        let a = NormalizedAdjacency::new(&g);
        let model = GcnModel::init(FEATURE_DIM, 5, 2, 0.6, Activation::Relu, 3).unwrap();
        let x = random_matrix(9, FEATURE_DIM, 8);
        let b = Array2::zeros(x.raw_dim());
        let ig = integrated_gradients_full(&model, &x, &b, &a, 0, 3, 256).unwrap();
        let gap = logit(&model, &x, &a, 0, 3) - logit(&model, &b, &a, 0, 3);
        assert!((ig.sum() - gap).abs() < 1e-3);
    }

    #[test]
    fn saliency_matches_finite_differences() {
        for seed in 0..5 {
            let g = generate_er(10, 0.3, seed).unwrap();
            let a = NormalizedAdjacency::new(&g);
            let model = GcnModel::init(FEATURE_DIM, 6, 2, 0.8, Activation::Relu, seed + 10).unwrap();
            let x = random_matrix(10, FEATURE_DIM, seed + 20);
            let (node, class) = (seed as usize % 10, seed as usize % 5);
            let s = saliency(&model, &x, &a, node, class).unwrap();
            let h = 1e-5;
            for j in 0..FEATURE_DIM {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[[node, j]] += h;
                xm[[node, j]] -= h;
                let fd = (logit(&model, &xp, &a, node, class) - logit(&model, &xm, &a, node, class)) / (2.0 * h);
                assert!(rel_err(s[j], fd.abs()) < 1e-4, "feature {j}: {} vs {}", s[j], fd.abs());
            }
        }
    }

    fn weighted_logit(model: &GcnModel, x: &Array2<f64>, g: &Graph, bump: Option<((usize, usize), f64)>, node: usize, class: usize) -> f64 {
        let entries: Vec<(usize, usize, f64)> = g
            .edges()
            .iter()
            .map(|&(u, v)| {
                let w = match bump {
                    Some((e, d)) if e == (u, v) => 1.0 + d,
                    _ => 1.0,
                };
                (u, v, w)
            })
            .collect();
        let a = NormalizedAdjacency::from_weighted(g.n(), &entries);
        logit(model, x, &a, node, class)
    }

    #[test]
    fn adjacency_gradient_matches_finite_differences() {
        for seed in 0..4 {
            let g = generate_er(12, 0.25, 40 + seed).unwrap();
            let model = GcnModel::init(FEATURE_DIM, 6, 2, 0.8, Activation::Relu, seed).unwrap();
            let x = random_matrix(12, FEATURE_DIM, seed + 7);
            let (node, class) = (3, 2);
            let scores = adjacency_gradient_saliency(&model, &x, &g, node, class).unwrap();
            assert_eq!(scores.len(), g.edge_count());
            let h = 1e-5;
            for &(e, s) in &scores {
                let fp = weighted_logit(&model, &x, &g, Some((e, h)), node, class);
                let fm = weighted_logit(&model, &x, &g, Some((e, -h)), node, class);
                let fd = ((fp - fm) / (2.0 * h)).abs();
                assert!(rel_err(s, fd) < 1e-3, "edge {e:?}: {s} vs {fd}");
            }
        }
    }

    #[test]
    fn adjacency_gradient_is_local() {
        let g = Graph::path(8);
        let model = GcnModel::init(FEATURE_DIM, 6, 2, 0.8, Activation::Relu, 5).unwrap();
        let x = random_matrix(8, FEATURE_DIM, 6).mapv(f64::abs);
        let scores = adjacency_gradient_saliency(&model, &x, &g, 0, 1).unwrap();
        let dist = g.bfs_distances(0);
        for ((u, v), s) in scores {
            let near = dist[u].unwrap().min(dist[v].unwrap());
            if near > model.layers() {
                assert_eq!(s, 0.0, "edge ({u}, {v})");
            }
        }
    }

    #[test]
    fn csv_layout() {
        let rows = vec![
            Attribution {
                method: AttributionMethod::Saliency,
                target: Some((3, 1)),
                item: AttributedItem::Feature(7),
                score: 0.5,
            },
            Attribution {
                method: AttributionMethod::Counterfactual,
                target: None,
                item: AttributedItem::Edge(9, 2),
                score: -0.25,
            },
        ];
        assert_eq!(
            attributions_csv(&rows),
            "method,target_node,target_class,feature_or_edge,score\n\
             saliency,3,1,infected_neighbor_fraction,0.5\n\
             counterfactual,,,2-9,-0.25\n"
        );
    }

    #[test]
    fn counterfactual_unreachable_edge_is_zero() {
        // Component {0, 1, 2} holds the infection; edge (3, 4) is elsewhere.
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (3, 4), (4, 5)]).unwrap();
        let p = EpidemicParams { beta_u: 0.6, gamma: 0.3, mu_d: 0.05, ..Default::default() };
        let (_, scores) =
            counterfactual_edge_importance(&g, &p, &VaccinationStrategy::None, &[0], 30, 50, 3, &[(3, 4), (4, 5)]).unwrap();
        assert!(scores.iter().all(|s| s.score == 0.0));
        assert!(counterfactual_edge_importance(&g, &p, &VaccinationStrategy::None, &[0], 30, 5, 3, &[(0, 2)]).is_err());
        let _ = init_state(&g, &[0], &[]).unwrap();
    }

    #[test]
    fn counterfactual_bridge_on_small_barbell() {
        let g = Graph::barbell(5, 1);
        let p = EpidemicParams { beta_u: 1.0, gamma: 1.0, ..Default::default() };
        let edges: Vec<_> = g.edges().to_vec();
        let (base, scores) = counterfactual_edge_importance(&g, &p, &VaccinationStrategy::None, &[0], 50, 4, 1, &edges).unwrap();
        assert_eq!(base, 1.0);
        let bridge = scores.iter().find(|s| s.edge == (5, 6)).unwrap();
        assert!((bridge.score - 5.0 / 11.0).abs() < 1e-15);
        for s in &scores {
            if s.edge.1 <= 4 || s.edge.0 >= 6 {
                assert_eq!(s.score, 0.0);
            }
        }
    }
}
