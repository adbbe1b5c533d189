use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::evaluate;
use crate::data::TrajectoryWindow;
use crate::model::{AttentionStrategy, ModelConfig};
use crate::pipeline::{PipelineError, TrainConfig, Trainer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub strategy: AttentionStrategy,
    pub ade: f64,
    pub fde: f64,
    /// Mean training loss of the last epoch.
    pub final_loss: f64,
}

/// Trains one model per strategy with identical hyperparameters, seed and
/// window order, then evaluates each on `test`.
pub fn ablate(
    strategies: &[AttentionStrategy],
    model: ModelConfig,
    train_config: &TrainConfig,
    scene: &str,
    train: &[TrajectoryWindow],
    test: &[TrajectoryWindow],
) -> Result<Vec<AblationRow>, PipelineError> {
    strategies
        .iter()
        .map(|&strategy| {
            let mut trainer =
                Trainer::new(ModelConfig { strategy, ..model }, train_config.clone())?;
            trainer.fit(train, |_, _| {})?;
            let report = evaluate(&trainer.params, scene, test)?;
            Ok(AblationRow {
                strategy,
                ade: report.ade,
                fde: report.fde,
                final_loss: trainer.history().last().copied().unwrap_or(f64::NAN),
            })
        })
        .collect()
}
