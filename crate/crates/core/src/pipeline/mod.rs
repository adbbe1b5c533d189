//! Full-window rollout, the training loss and the epoch loop.

mod loss;
mod rollout;
#[cfg(test)]
mod tests;
mod train;

use alloc::boxed::Box;
use alloc::string::String;

pub use loss::{l2_loss, l2_loss_graph, loss_and_grads, prediction_targets};
pub use rollout::{
    rollout, rollout_graph, AttentionStep, GraphRollout, RolloutMode, RolloutResult,
};
pub use train::{epoch_seed, train_epoch, EpochSummary, TrainConfig, Trainer};

use crate::diff::DiffError;
use crate::model::{ConfigError, ModelError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("rollout step {step}: {source}")]
    Step { step: usize, source: ModelError },
    #[error("window {scene}@{start_frame}: {source}")]
    Window {
        scene: String,
        start_frame: usize,
        source: Box<PipelineError>,
    },
    #[error("window has {found} frames, model expects {expected}")]
    WindowLength { expected: usize, found: usize },
    #[error("window has no pedestrian")]
    EmptyWindow,
    #[error("sequence length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("dataset has no window")]
    EmptyDataset,
}
