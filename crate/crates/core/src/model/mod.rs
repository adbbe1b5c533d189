//! The SRA-LSTM architecture as single-step operations over a scene.

mod config;
mod nabs;
mod params;
mod step;

use alloc::vec::Vec;

pub use config::{AttentionStrategy, ConfigError, ModelConfig};
pub use nabs::{nabs_decode, nabs_encode, Point};
pub use params::{
    param_count, Affine, BoundParams, LstmWeights, ModelParams, ParamsError, StrategyParams,
};
pub use step::{SceneState, StepOutput};

use crate::diff::DiffError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("scene has no present pedestrian")]
    EmptyScene,
    #[error("unknown pedestrian pair ({i}, {j})")]
    UnknownPair { i: usize, j: usize },
    #[error("presence mask has {found} entries for {expected} pedestrians")]
    PresenceLength { expected: usize, found: usize },
    #[error("step input has shape {found:?}, expected {expected:?}")]
    InputShape {
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("parameters for strategy `{0}` are not allocated")]
    MissingStrategyParams(AttentionStrategy),
    #[error("missing {0}")]
    MissingInput(&'static str),
}
