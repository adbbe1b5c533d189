use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{loss_and_grads, PipelineError};
use crate::data::{rotate_window, TrajectoryWindow};
use crate::diff::{clip_grad_norm, Adam, AdamConfig, DiffError, Parameters};
use crate::model::{ModelConfig, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub clip_norm: f64,
    /// Random rotation of every training window.
    pub augment: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 300,
            seed: 0,
            clip_norm: 10.0,
            augment: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub epoch: usize,
    /// Mean over windows of the loss before each window's update.
    pub mean_loss: f64,
    pub windows: usize,
    /// Largest pre-clip gradient norm seen in the epoch.
    pub max_grad_norm: f64,
}

/// Seed for epoch `epoch` of a run seeded with `seed` (splitmix64 mix).
pub fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    let mut z = seed.wrapping_add((epoch as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One pass over `windows` in an order shuffled by `seed`, one optimizer
/// step per window.
pub fn train_epoch(
    params: &mut ModelParams,
    adam: &mut Adam,
    windows: &[TrajectoryWindow],
    seed: u64,
    config: &TrainConfig,
) -> Result<EpochSummary, PipelineError> {
    if windows.is_empty() {
        return Err(PipelineError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..windows.len()).collect();
    order.shuffle(&mut rng);
    let mut total = 0.0;
    let mut max_norm: f64 = 0.0;
    for &i in &order {
        let window = &windows[i];
        let angle = if config.augment {
            rng.random_range(0.0..TAU)
        } else {
            0.0
        };
        let rotated = rotate_window(window, angle);
        let tag = |e: PipelineError| PipelineError::Window {
            scene: window.scene.clone(),
            start_frame: window.start_frame,
            source: Box::new(e),
        };
        params.zero_grads();
        let loss = loss_and_grads(params, &rotated).map_err(tag)?;
        let norm = clip_grad_norm(params, config.clip_norm);
        if !norm.is_finite() {
            return Err(tag(DiffError::NonFinite {
                op: "gradient norm",
            }
            .into()));
        }
        adam.step(params).map_err(|e| tag(e.into()))?;
        params.zero_grads();
        total += loss;
        max_norm = max_norm.max(norm);
    }
    Ok(EpochSummary {
        epoch: 0,
        mean_loss: total / windows.len() as f64,
        windows: windows.len(),
        max_grad_norm: max_norm,
    })
}

/// Parameters, optimizer and loss history of a training run.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub params: ModelParams,
    pub adam: Adam,
    pub config: TrainConfig,
    history: Vec<f64>,
}

impl Trainer {
    /// Fresh run: parameters initialized from `config.seed`.
    pub fn new(model: ModelConfig, config: TrainConfig) -> Result<Self, PipelineError> {
        let params = ModelParams::init(model, config.seed)?;
        let adam = Adam::new(AdamConfig::with_learning_rate(config.learning_rate));
        Ok(Self {
            params,
            adam,
            config,
            history: Vec::new(),
        })
    }

    /// Continues a run from saved state.
    pub fn resume(params: ModelParams, adam: Adam, config: TrainConfig, history: Vec<f64>) -> Self {
        Self {
            params,
            adam,
            config,
            history,
        }
    }

    /// Completed epochs.
    pub fn epoch(&self) -> usize {
        self.history.len()
    }

    /// Mean loss per completed epoch.
    pub fn history(&self) -> &[f64] {
        &self.history
    }

    pub fn run_epoch(
        &mut self,
        windows: &[TrajectoryWindow],
    ) -> Result<EpochSummary, PipelineError> {
        let epoch = self.epoch();
        let seed = epoch_seed(self.config.seed, epoch);
        let mut summary = train_epoch(
            &mut self.params,
            &mut self.adam,
            windows,
            seed,
            &self.config,
        )?;
        summary.epoch = epoch + 1;
        self.history.push(summary.mean_loss);
        Ok(summary)
    }

    /// Runs epochs until `config.epochs` are complete.
    pub fn fit(
        &mut self,
        windows: &[TrajectoryWindow],
        mut on_epoch: impl FnMut(&Self, &EpochSummary),
    ) -> Result<(), PipelineError> {
        while self.epoch() < self.config.epochs {
            let summary = self.run_epoch(windows)?;
            on_epoch(self, &summary);
        }
        Ok(())
    }
}
