use alloc::vec;
use alloc::vec::Vec;

use super::{rollout_graph, PipelineError, RolloutMode, RolloutResult};
use crate::data::TrajectoryWindow;
use crate::diff::{Tape, Var};
use crate::model::{ModelParams, Point};

/// Ground-truth Nabs offsets for the future frames, per pedestrian.
pub fn prediction_targets(window: &TrajectoryWindow, obs_len: usize) -> Vec<Vec<Point>> {
    RolloutResult::truth_nabs(window, obs_len)
}

/// Mean over pedestrians and steps of the squared Euclidean distance.
pub fn l2_loss(predicted: &[Vec<Point>], truth: &[Vec<Point>]) -> Result<f64, PipelineError> {
    if predicted.len() != truth.len() {
        return Err(PipelineError::LengthMismatch {
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (p, t) in predicted.iter().zip(truth) {
        if p.len() != t.len() {
            return Err(PipelineError::LengthMismatch {
                expected: t.len(),
                found: p.len(),
            });
        }
        for (a, b) in p.iter().zip(t) {
            let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
            total += dx * dx + dy * dy;
        }
        count += p.len();
    }
    if count == 0 {
        return Err(PipelineError::EmptyWindow);
    }
    Ok(total / count as f64)
}

/// Differentiable [`l2_loss`] over per-step `[N×2]` predictions.
pub fn l2_loss_graph(
    tape: &mut Tape,
    predictions: &[Var],
    truth: &[Vec<Point>],
) -> Result<Var, PipelineError> {
    let n = truth.len();
    let steps = predictions.len();
    if n == 0 || steps == 0 {
        return Err(PipelineError::EmptyWindow);
    }
    let mut rows = Vec::with_capacity(steps * n * 2);
    for t in 0..steps {
        for track in truth {
            let p = track.get(t).ok_or(PipelineError::LengthMismatch {
                expected: steps,
                found: track.len(),
            })?;
            rows.extend_from_slice(p);
        }
    }
    if let Some(track) = truth.iter().find(|t| t.len() != steps) {
        return Err(PipelineError::LengthMismatch {
            expected: steps,
            found: track.len(),
        });
    }
    let stacked = tape.concat(predictions, 0)?;
    let target = tape.constant_from(vec![steps * n, 2], rows)?;
    let diff = tape.sub(stacked, target)?;
    let sq = tape.mul(diff, diff)?;
    let total = tape.sum(sq)?;
    Ok(tape.scale(total, 1.0 / (steps * n) as f64)?)
}

/// Free rollout of `window`, loss, and backward; gradients are added to
/// the parameters' grad slots. Returns the loss.
pub fn loss_and_grads(
    params: &mut ModelParams,
    window: &TrajectoryWindow,
) -> Result<f64, PipelineError> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape, true);
    let graph = rollout_graph(&mut tape, &bound, window, RolloutMode::Free)?;
    let truth = prediction_targets(window, params.config().obs_len);
    let loss = l2_loss_graph(&mut tape, &graph.predictions, &truth)?;
    tape.backward(loss)?;
    params.collect_grads(&tape, &bound)?;
    Ok(tape.value(loss)[0])
}
