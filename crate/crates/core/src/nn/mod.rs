//! Minimal deterministic 1D-CNN engine.
//!
//! Activations are `(channels, len)` tensors stored row-major. The layer vocabulary is
//! fixed: [`LayerSpec`]. Forward passes return an activation [`Trace`] that holds every
//! layer's input; both [`Model::backward`] and relevance propagation consume it.

mod checkpoint;
mod graph;
mod model;
mod train;

use thiserror::Error;

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use graph::{LayerGraph, LayerSpec, Shape};
pub(crate) use model::argmax_window;
pub(crate) use train::sample_tensor;
pub use model::{loss, softmax, Gradients, LayerParams, Model, Prediction, Tensor, Trace};
pub use train::{batch_gradients, train, InitScheme, Optimizer, TrainConfig};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid layer graph: {0}")]
    InvalidGraph(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training split contains a single class")]
    DegenerateSplit,
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl NnError {
    pub fn class(&self) -> &'static str {
        match self {
            NnError::ShapeMismatch(_) => "ShapeMismatch",
            NnError::InvalidGraph(_) => "InvalidGraph",
            NnError::InvalidConfig(_) => "ConfigError",
            NnError::DegenerateSplit => "DegenerateSplit",
            NnError::Checkpoint(_) => "CheckpointMismatch",
            NnError::Io(_) => "IoError",
        }
    }
}

pub type Result<T, E = NnError> = std::result::Result<T, E>;
