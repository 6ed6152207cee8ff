use ndarray::{Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::NUM_CLASSES;
use super::NormalizedAdjacency;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    /// No rectification. Used to build exactly linear models.
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// `k`-layer graph convolutional network:
/// `H_{l+1} = σ(Â H_l W_l)` for the first `k - 1` layers, then
/// `logits = Â H_{k-1} W_{k-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    pub weights: Vec<Array2<f64>>,
    pub activation: Activation,
}

/// Intermediate values of a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Layer inputs `H_l`, with `H_0 = X`.
    pub inputs: Vec<Array2<f64>>,
    /// Propagated inputs `Â H_l`.
    pub propagated: Vec<Array2<f64>>,
    /// Pre-activations `Â H_l W_l`; the last one is the logits.
    pub pre_activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn logits(&self) -> &Array2<f64> {
        self.pre_activations.last().expect("at least one layer")
    }

    /// Output of the last hidden layer (`X` itself for a one-layer model).
    pub fn hidden(&self) -> &Array2<f64> {
        self.inputs.last().expect("at least one layer")
    }
}

/// What [`GcnModel::backward`] should differentiate with respect to.
#[derive(Debug, Clone, Copy, Default)]
pub struct GradientRequest {
    pub weights: bool,
    pub input: bool,
    pub adjacency: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub input: Option<Array2<f64>>,
    /// `∂F/∂Â_ij` for every stored entry of the operator, in entry order.
    pub adjacency: Option<Vec<f64>>,
}

impl GcnModel {
    /// Weights drawn uniformly from `[-scale, scale]`, layer by layer in
    /// row-major order. Dimensions chain `input_dim -> hidden (k-1 times)
    /// -> NUM_CLASSES`.
    pub fn init(input_dim: usize, hidden: usize, layers: usize, scale: f64, activation: Activation, seed: u64) -> Result<Self> {
        if layers == 0 {
            return Err(Error::param("a GCN needs at least one layer"));
        }
        if hidden == 0 && layers > 1 {
            return Err(Error::param("hidden width must be >= 1"));
        }
        let mut rng = rng_from_seed(seed);
        let mut dims = vec![input_dim];
        dims.extend(std::iter::repeat_n(hidden, layers - 1));
        dims.push(NUM_CLASSES);
        let weights = dims
            .windows(2)
            .map(|w| Array2::from_shape_fn((w[0], w[1]), |_| rng.random_range(-scale..=scale)))
            .collect();
        Ok(GcnModel { weights, activation })
    }

    pub fn from_weights(weights: Vec<Array2<f64>>, activation: Activation) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Shape("model has no layers".into()));
        }
        for (l, w) in weights.windows(2).enumerate() {
            if w[0].ncols() != w[1].nrows() {
                return Err(Error::Shape(format!(
                    "layer {l} outputs {} columns but layer {} expects {}",
                    w[0].ncols(),
                    l + 1,
                    w[1].nrows()
                )));
            }
        }
        Ok(GcnModel { weights, activation })
    }

    pub fn layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights[self.weights.len() - 1].ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        if self.layers() > 1 {
            self.weights[0].ncols()
        } else {
            self.input_dim()
        }
    }

    fn check_shapes(&self, x: &Array2<f64>, a: &NormalizedAdjacency) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "features have {} columns, model expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        if x.nrows() != a.n() {
            return Err(Error::Shape(format!(
                "features have {} rows, operator has {} nodes",
                x.nrows(),
                a.n()
            )));
        }
        Ok(())
    }

    pub fn forward_cached(&self, x: &Array2<f64>, a: &NormalizedAdjacency) -> Result<ForwardCache> {
        self.check_shapes(x, a)?;
        let k = self.layers();
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(k),
            propagated: Vec::with_capacity(k),
            pre_activations: Vec::with_capacity(k),
        };
        let mut h = x.clone();
        for (l, w) in self.weights.iter().enumerate() {
            let ah = a.apply(&h);
            let z = ah.dot(w);
            let next = (l + 1 < k).then(|| z.mapv(|v| self.activation.apply(v)));
            cache.inputs.push(h);
            cache.propagated.push(ah);
            cache.pre_activations.push(z);
            match next {
                Some(nx) => h = nx,
                None => break,
            }
        }
        Ok(cache)
    }

    /// Returns `(logits, hidden)`.
    pub fn forward(&self, x: &Array2<f64>, a: &NormalizedAdjacency) -> Result<(Array2<f64>, Array2<f64>)> {
        let cache = self.forward_cached(x, a)?;
        let hidden = cache.hidden().clone();
        let logits = cache.pre_activations.into_iter().last().expect("at least one layer");
        Ok((logits, hidden))
    }

    pub fn probabilities(&self, x: &Array2<f64>, a: &NormalizedAdjacency) -> Result<Array2<f64>> {
        Ok(softmax_rows(&self.forward(x, a)?.0))
    }

    /// Reverse accumulation from `d_logits = ∂F/∂logits`.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        a: &NormalizedAdjacency,
        d_logits: Array2<f64>,
        want: GradientRequest,
    ) -> Gradients {
        let k = self.layers();
        let mut grads = Gradients {
            weights: if want.weights {
                vec![Array2::zeros((0, 0)); k]
            } else {
                Vec::new()
            },
            input: None,
            adjacency: want.adjacency.then(|| vec![0.0; a.nnz()]),
        };
        let mut d_z = d_logits;
        for l in (0..k).rev() {
            let w = &self.weights[l];
            if want.weights {
                grads.weights[l] = cache.propagated[l].t().dot(&d_z);
            }
            if let Some(d_adj) = grads.adjacency.as_mut() {
                // Z_l = Â (H_l W_l): ∂F/∂Â_ij = Σ_c dZ_ic (H_l W_l)_jc
                let hw = cache.inputs[l].dot(w);
                for (slot, (i, j, _)) in d_adj.iter_mut().zip(a.entries()) {
                    *slot += d_z.row(i).dot(&hw.row(j));
                }
            }
            if l == 0 && !want.input {
                break;
            }
            // Â is symmetric, so Âᵀ · (dZ Wᵀ) = Â · (dZ Wᵀ).
            let d_h = a.apply(&d_z.dot(&w.t()));
            if l == 0 {
                grads.input = Some(d_h);
                break;
            }
            let z_prev = &cache.pre_activations[l - 1];
            let mut next = d_h;
            next.zip_mut_with(z_prev, |g, &z| *g *= self.activation.derivative(z));
            d_z = next;
        }
        grads
    }

    /// Gradient of `logits[node, class]`.
    pub fn logit_gradient(
        &self,
        x: &Array2<f64>,
        a: &NormalizedAdjacency,
        node: usize,
        class: usize,
        want: GradientRequest,
    ) -> Result<(f64, Gradients)> {
        let cache = self.forward_cached(x, a)?;
        let logits = cache.logits();
        if node >= logits.nrows() || class >= logits.ncols() {
            return Err(Error::param(format!("target ({node}, {class}) is out of range")));
        }
        let value = logits[[node, class]];
        let mut seed = Array2::zeros(logits.raw_dim());
        seed[[node, class]] = 1.0;
        Ok((value, self.backward(&cache, a, seed, want)))
    }

    /// Most probable class per node, ties to the lowest index.
    pub fn predict(&self, x: &Array2<f64>, a: &NormalizedAdjacency) -> Result<Vec<usize>> {
        let (logits, _) = self.forward(x, a)?;
        Ok(argmax_rows(&logits))
    }
}

pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut p = logits.clone();
    for mut row in p.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    p
}

pub fn argmax_rows(m: &Array2<f64>) -> Vec<usize> {
    m.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Class-weighted cross-entropy accumulated over one snapshot: returns
/// `(Σ w_y · CE, Σ w_y, ∂(Σ w_y · CE)/∂logits)`.
pub(crate) fn weighted_cross_entropy(
    logits: &Array2<f64>,
    labels: &[usize],
    class_weights: &[f64; NUM_CLASSES],
) -> Result<(f64, f64, Array2<f64>)> {
    if labels.len() != logits.nrows() {
        return Err(Error::Shape(format!(
            "{} labels for {} nodes",
            labels.len(),
            logits.nrows()
        )));
    }
    let probs = softmax_rows(logits);
    let mut grad = Array2::zeros(logits.raw_dim());
    let mut loss = 0.0;
    let mut weight = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        if y >= NUM_CLASSES {
            return Err(Error::param(format!("label {y} is not a valid class")));
        }
        let w = class_weights[y];
        if w == 0.0 {
            continue;
        }
        let row = logits.row(i);
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let log_sum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        loss += w * (log_sum - row[y]);
        weight += w;
        for c in 0..logits.ncols() {
            grad[[i, c]] = w * (probs[[i, c]] - if c == y { 1.0 } else { 0.0 });
        }
    }
    Ok((loss, weight, grad))
}

/// Weighted mean cross-entropy over all nodes and its weight gradients.
pub fn loss_and_gradients(
    model: &GcnModel,
    x: &Array2<f64>,
    a: &NormalizedAdjacency,
    labels: &[usize],
    class_weights: &[f64; NUM_CLASSES],
) -> Result<(f64, Vec<Array2<f64>>)> {
    batch_loss_and_gradients(model, [(x, a, labels)], class_weights)
}

/// Weighted mean cross-entropy pooled over several snapshots.
pub fn batch_loss_and_gradients<'a, I>(
    model: &GcnModel,
    batch: I,
    class_weights: &[f64; NUM_CLASSES],
) -> Result<(f64, Vec<Array2<f64>>)>
where
    I: IntoIterator<Item = (&'a Array2<f64>, &'a NormalizedAdjacency, &'a [usize])>,
{
    let mut total_loss = 0.0;
    let mut total_weight = 0.0;
    let mut grads: Vec<Array2<f64>> = model.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect();
    let want = GradientRequest {
        weights: true,
        ..Default::default()
    };
    for (x, a, labels) in batch {
        let cache = model.forward_cached(x, a)?;
        let (loss, weight, d_logits) = weighted_cross_entropy(cache.logits(), labels, class_weights)?;
        total_loss += loss;
        total_weight += weight;
        let g = model.backward(&cache, a, d_logits, want);
        for (acc, gw) in grads.iter_mut().zip(g.weights) {
            *acc += &gw;
        }
    }
    if total_weight <= 0.0 {
        return Err(Error::EmptyLabels);
    }
    for g in &mut grads {
        *g /= total_weight;
    }
    Ok((total_loss / total_weight, grads))
}

pub type ConfusionMatrix = [[usize; NUM_CLASSES]; NUM_CLASSES];

/// Rows are true classes, columns predictions.
pub fn confusion_matrix(labels: &[usize], predictions: &[usize]) -> ConfusionMatrix {
    let mut m = [[0; NUM_CLASSES]; NUM_CLASSES];
    for (&y, &p) in labels.iter().zip(predictions) {
        m[y][p] += 1;
    }
    m
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub data: Vec<f64>,
}

impl From<&Array2<f64>> for MatrixJson {
    fn from(m: &Array2<f64>) -> Self {
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.iter().copied().collect(),
        }
    }
}

impl MatrixJson {
    pub fn to_array(&self) -> Result<Array2<f64>> {
        Array2::from_shape_vec((self.rows, self.cols), self.data.clone())
            .map_err(|e| Error::Shape(format!("weight matrix {}x{}: {e}", self.rows, self.cols)))
    }
}
