use serde::{Deserialize, Serialize};

use super::features::{SnapshotDataset, FEATURE_DIM, NUM_CLASSES};
use super::model::{batch_loss_and_gradients, confusion_matrix, Activation, ConfusionMatrix, GcnModel};
use crate::error::{Error, Result};

/// Full-batch gradient descent settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "defaults::lr")]
    pub lr: f64,
    #[serde(default = "defaults::epochs")]
    pub epochs: usize,
    #[serde(default = "defaults::hidden")]
    pub hidden: usize,
    #[serde(default = "defaults::layers")]
    pub layers: usize,
    /// Per-class loss weights; inverse training-split frequencies when absent.
    #[serde(default)]
    pub class_weights: Option<[f64; NUM_CLASSES]>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::init_scale")]
    pub init_scale: f64,
    #[serde(default)]
    pub activation: Activation,
}

mod defaults {
    pub fn lr() -> f64 {
        0.2
    }
    pub fn epochs() -> usize {
        200
    }
    pub fn hidden() -> usize {
        16
    }
    pub fn layers() -> usize {
        2
    }
    pub fn init_scale() -> f64 {
        0.1
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: defaults::lr(),
            epochs: defaults::epochs(),
            hidden: defaults::hidden(),
            layers: defaults::layers(),
            class_weights: None,
            seed: 0,
            init_scale: defaults::init_scale(),
            activation: Activation::Relu,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    /// Training loss at the start of each epoch.
    pub train_loss: Vec<f64>,
    /// Validation loss at the start of each epoch (empty without a
    /// validation split).
    pub validation_loss: Vec<f64>,
    pub class_weights: [f64; NUM_CLASSES],
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: GcnModel,
    pub history: TrainingHistory,
    pub config: TrainConfig,
}

fn batch<'a>(
    ds: &'a SnapshotDataset,
    idx: &'a [usize],
) -> impl Iterator<Item = (&'a ndarray::Array2<f64>, &'a super::NormalizedAdjacency, &'a [usize])> + 'a {
    idx.iter().map(move |&i| {
        let s = &ds.snapshots[i];
        (&s.features, ds.operator(s), s.labels.as_slice())
    })
}

pub fn train(ds: &SnapshotDataset, config: &TrainConfig) -> Result<TrainedModel> {
    if ds.train.is_empty() {
        return Err(Error::param("training split is empty"));
    }
    if !(config.lr.is_finite() && config.lr >= 0.0) {
        return Err(Error::param(format!("learning rate {} must be finite and >= 0", config.lr)));
    }
    let class_weights = config.class_weights.unwrap_or_else(|| ds.inverse_frequency_weights());
    let mut model = GcnModel::init(
        FEATURE_DIM,
        config.hidden,
        config.layers,
        config.init_scale,
        config.activation,
        config.seed,
    )?;
    let mut history = TrainingHistory {
        train_loss: Vec::with_capacity(config.epochs),
        validation_loss: Vec::new(),
        class_weights,
    };
    for epoch in 0..config.epochs {
        let (loss, grads) = batch_loss_and_gradients(&model, batch(ds, &ds.train), &class_weights)?;
        if !loss.is_finite() || grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::Divergence { epoch, loss });
        }
        history.train_loss.push(loss);
        if !ds.validation.is_empty() {
            match batch_loss_and_gradients(&model, batch(ds, &ds.validation), &class_weights) {
                Ok((v, _)) => history.validation_loss.push(v),
                // Validation may hold only classes with zero weight.
                Err(Error::EmptyLabels) => history.validation_loss.push(f64::NAN),
                Err(e) => return Err(e),
            }
        }
        for (w, g) in model.weights.iter_mut().zip(&grads) {
            w.scaled_add(-config.lr, g);
        }
    }
    Ok(TrainedModel {
        model,
        history,
        config: config.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub majority_baseline: f64,
    pub confusion: ConfusionMatrix,
    pub labeled_nodes: usize,
}

/// Accuracy and confusion matrix over the given snapshots.
pub fn evaluate(model: &GcnModel, ds: &SnapshotDataset, indices: &[usize]) -> Result<Evaluation> {
    let mut confusion = [[0; NUM_CLASSES]; NUM_CLASSES];
    for (x, a, labels) in batch(ds, indices) {
        let pred = model.predict(x, a)?;
        let m = confusion_matrix(labels, &pred);
        for (acc, row) in confusion.iter_mut().zip(m) {
            for (c, v) in acc.iter_mut().zip(row) {
                *c += v;
            }
        }
    }
    let total: usize = confusion.iter().flatten().sum();
    let correct: usize = (0..NUM_CLASSES).map(|c| confusion[c][c]).sum();
    Ok(Evaluation {
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        majority_baseline: ds.majority_baseline(indices),
        confusion,
        labeled_nodes: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epidemic::{ensemble_traces, EpidemicParams};
    use crate::graph::Graph;
    use crate::interventions::VaccinationStrategy;

    fn small_dataset() -> SnapshotDataset {
        let g = crate::graph::generate_er(20, 0.2, 3).unwrap();
        let p = EpidemicParams { beta_u: 0.4, gamma: 0.3, mu_d: 0.05, ..Default::default() };
        let (_, traces) = ensemble_traces(&g, &p, &VaccinationStrategy::None, &[0, 1], 15, 4, 9).unwrap();
        SnapshotDataset::from_traces(&g, &traces, 0.25, None, 2).unwrap()
    }

    #[test]
    fn zero_lr_keeps_initial_weights() {
        let ds = small_dataset();
        let cfg = TrainConfig { lr: 0.0, epochs: 5, seed: 4, ..Default::default() };
        let trained = train(&ds, &cfg).unwrap();
        let init = GcnModel::init(FEATURE_DIM, 16, 2, 0.1, Activation::Relu, 4).unwrap();
        assert_eq!(trained.model, init);
        assert_eq!(trained.history.train_loss.len(), 5);
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let ds = small_dataset();
        let cfg = TrainConfig { epochs: 0, seed: 4, ..Default::default() };
        let trained = train(&ds, &cfg).unwrap();
        assert_eq!(trained.model, GcnModel::init(FEATURE_DIM, 16, 2, 0.1, Activation::Relu, 4).unwrap());
    }

    #[test]
    fn training_is_deterministic() {
        let ds = small_dataset();
        let cfg = TrainConfig { epochs: 20, seed: 1, ..Default::default() };
        let a = train(&ds, &cfg).unwrap().model;
        let b = train(&ds, &cfg).unwrap().model;
        let bytes = |m: &GcnModel| m.weights.iter().flat_map(|w| w.iter().map(|v| v.to_bits())).collect::<Vec<_>>();
        assert_eq!(bytes(&a), bytes(&b));
    }

    #[test]
    fn small_lr_loss_is_non_increasing() {
        let ds = small_dataset();
        let cfg = TrainConfig { lr: 0.05, epochs: 60, seed: 7, ..Default::default() };
        let h = train(&ds, &cfg).unwrap().history;
        for w in h.train_loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "loss rose from {} to {}", w[0], w[1]);
        }
        assert!(h.train_loss.last().unwrap() < &h.train_loss[0]);
    }

    #[test]
    fn divergence_is_reported() {
        let ds = small_dataset();
        let cfg = TrainConfig { lr: 1e200, epochs: 10, init_scale: 1.0, ..Default::default() };
        match train(&ds, &cfg) {
            Err(Error::Divergence { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn evaluation_counts_every_labeled_node() {
        let ds = small_dataset();
        let trained = train(&ds, &TrainConfig { epochs: 3, ..Default::default() }).unwrap();
        let eval = evaluate(&trained.model, &ds, &ds.validation).unwrap();
        assert_eq!(eval.labeled_nodes, ds.validation.len() * 20);
        let k = Graph::complete(2);
        assert_eq!(k.n(), 2);
    }
}
