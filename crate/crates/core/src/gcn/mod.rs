//! Graph convolutional node-state classifier.

mod adjacency;
pub mod features;
pub mod model;
pub mod pca;
pub mod train;

pub use adjacency::NormalizedAdjacency;
pub use features::{node_features, Snapshot, SnapshotDataset, StructuralFeatures, FEATURE_DIM, FEATURE_NAMES, NUM_CLASSES};
pub use model::{
    argmax_rows, batch_loss_and_gradients, confusion_matrix, loss_and_gradients, softmax_rows, Activation, ConfusionMatrix,
    GcnModel, GradientRequest, Gradients,
};
pub use pca::project_embeddings;
pub use train::{evaluate, train, Evaluation, TrainConfig, TrainedModel, TrainingHistory};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use model::MatrixJson;

/// On-disk model: shapes, hyperparameters and row-major weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub layers: usize,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
    pub hyperparameters: TrainConfig,
    pub weights: Vec<MatrixJson>,
}

impl ModelFile {
    pub fn new(model: &GcnModel, hyperparameters: &TrainConfig) -> Self {
        ModelFile {
            layers: model.layers(),
            input_dim: model.input_dim(),
            hidden_dim: model.hidden_dim(),
            output_dim: model.output_dim(),
            activation: model.activation,
            hyperparameters: hyperparameters.clone(),
            weights: model.weights.iter().map(MatrixJson::from).collect(),
        }
    }

    pub fn to_model(&self) -> Result<GcnModel> {
        let weights = self.weights.iter().map(MatrixJson::to_array).collect::<Result<Vec<_>>>()?;
        let model = GcnModel::from_weights(weights, self.activation)?;
        if model.layers() != self.layers || model.input_dim() != self.input_dim || model.output_dim() != self.output_dim {
            return Err(crate::Error::Shape("model file header disagrees with its weights".into()));
        }
        Ok(model)
    }
}
