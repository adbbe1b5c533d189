//! Displacement metrics, dataset evaluation and the attention ablation.

mod ablate;
mod metrics;

pub use ablate::{ablate, AblationRow};
pub use metrics::{ade, displacements, fde, MetricError};

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::TrajectoryWindow;
use crate::model::ModelParams;
use crate::pipeline::{rollout, PipelineError, RolloutMode};

/// Displacement errors of one evaluated window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub scene: String,
    pub start_frame: usize,
    pub ped_ids: Vec<u64>,
    /// `displacements[k][t]`: pedestrian `k`, future frame `t`, meters.
    pub displacements: Vec<Vec<f64>>,
}

impl WindowRecord {
    pub fn ade(&self) -> f64 {
        mean(self.displacements.iter().flatten().copied())
    }

    pub fn fde(&self) -> f64 {
        mean(self.displacements.iter().filter_map(|d| d.last().copied()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scene: String,
    pub window_count: usize,
    pub ade: f64,
    pub fde: f64,
    pub windows: Vec<WindowRecord>,
    /// Mean wall-clock time of one model step, when measured.
    pub seconds_per_step: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut total, mut count) = (0.0, 0usize);
    for v in values {
        total += v;
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

impl EvalReport {
    /// Aggregates records in order: ADE over every (pedestrian, step) of
    /// every window, FDE over every pedestrian's final step.
    pub fn from_records(scene: &str, windows: Vec<WindowRecord>) -> Self {
        let ade = mean(
            windows
                .iter()
                .flat_map(|w| w.displacements.iter().flatten().copied()),
        );
        let fde = mean(
            windows
                .iter()
                .flat_map(|w| w.displacements.iter().filter_map(|d| d.last().copied())),
        );
        Self {
            scene: String::from(scene),
            window_count: windows.len(),
            ade,
            fde,
            windows,
            seconds_per_step: None,
        }
    }
}

/// Free rollout of one window and its per-step displacement errors.
pub fn evaluate_window(
    params: &ModelParams,
    window: &TrajectoryWindow,
) -> Result<WindowRecord, PipelineError> {
    let tag = |e| PipelineError::Window {
        scene: window.scene.clone(),
        start_frame: window.start_frame,
        source: alloc::boxed::Box::new(e),
    };
    let result = rollout(params, window, RolloutMode::Free).map_err(tag)?;
    let obs = params.config().obs_len;
    let displacements = result
        .predicted_abs
        .iter()
        .enumerate()
        .map(|(k, pred)| {
            let truth: Vec<_> = window.frames[obs..].iter().map(|f| f[k]).collect();
            displacements(pred, &truth)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| {
            tag(PipelineError::LengthMismatch {
                expected: e.expected,
                found: e.found,
            })
        })?;
    Ok(WindowRecord {
        scene: window.scene.clone(),
        start_frame: window.start_frame,
        ped_ids: window.ped_ids.clone(),
        displacements,
    })
}

/// Sequential evaluation of `windows` under the name `scene`.
pub fn evaluate(
    params: &ModelParams,
    scene: &str,
    windows: &[TrajectoryWindow],
) -> Result<EvalReport, PipelineError> {
    let records = windows
        .iter()
        .map(|w| evaluate_window(params, w))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport::from_records(scene, records))
}
