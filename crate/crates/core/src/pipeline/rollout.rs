use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::data::TrajectoryWindow;
use crate::diff::{Tape, Var};
use crate::model::{nabs_decode, nabs_encode, BoundParams, ModelParams, Point, SceneState};

/// Which positions feed the model after the last observed frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RolloutMode {
    /// Ground truth while observing, then the model's own predictions.
    Free,
    /// Ground truth at every step. Diagnostic only.
    TeacherForced,
}

/// Prediction Vars left on the tape by [`rollout_graph`].
#[derive(Debug, Clone)]
pub struct GraphRollout {
    /// One `[N×2]` Nabs prediction per future frame.
    pub predictions: Vec<Var>,
    /// Attention `[N×N]` per step, when the strategy attends and N ≥ 2.
    pub attention: Vec<Option<Var>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionStep {
    /// Input frame index within the window.
    pub frame: usize,
    /// Row `i` holds pedestrian `i`'s weights over the others.
    pub weights: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutResult {
    pub ped_ids: Vec<u64>,
    /// Position of each pedestrian at the last observed frame.
    pub anchors: Vec<Point>,
    /// `predicted_nabs[k][t]`: pedestrian `k`, future frame `t`.
    pub predicted_nabs: Vec<Vec<Point>>,
    pub predicted_abs: Vec<Vec<Point>>,
    pub attention_trace: Vec<AttentionStep>,
}

fn frame_rows(frame: &[Point]) -> Vec<f64> {
    frame.iter().flat_map(|p| [p[0], p[1]]).collect()
}

/// Runs the model over a whole window on `tape`.
///
/// Input frame `t` produces the prediction for frame `t + 1`. Frames up to
/// the last observed one come from the window; later inputs are the
/// model's previous prediction, decoded against each pedestrian's anchor.
pub fn rollout_graph(
    tape: &mut Tape,
    bound: &BoundParams,
    window: &TrajectoryWindow,
    mode: RolloutMode,
) -> Result<GraphRollout, PipelineError> {
    let config = bound.config;
    let (obs, total) = (config.obs_len, config.window_len());
    if window.len() != total {
        return Err(PipelineError::WindowLength {
            expected: total,
            found: window.len(),
        });
    }
    let n = window.num_peds();
    if n == 0 {
        return Err(PipelineError::EmptyWindow);
    }
    let anchors = &window.frames[obs - 1];
    let anchor = tape.constant_from(vec![n, 2], frame_rows(anchors))?;
    let mut state = SceneState::new(tape, window.ped_ids.clone(), config.hidden_dim)?;
    let mut predictions = Vec::with_capacity(config.pred_len);
    let mut attention = Vec::with_capacity(total - 1);
    let mut previous: Option<Var> = None;
    for t in 0..total - 1 {
        let step = t + 1;
        let wrap = |e| PipelineError::Step { step, source: e };
        let (positions, nabs) = match previous {
            Some(pred) if t >= obs && mode == RolloutMode::Free => {
                let abs = tape.add(anchor, pred).map_err(|e| wrap(e.into()))?;
                (abs, pred)
            }
            _ => {
                let frame = &window.frames[t];
                let rel: Vec<Point> = frame
                    .iter()
                    .zip(anchors)
                    .map(|(p, a)| [p[0] - a[0], p[1] - a[1]])
                    .collect();
                let pos = tape
                    .constant_from(vec![n, 2], frame_rows(frame))
                    .map_err(|e| wrap(e.into()))?;
                let rel = tape
                    .constant_from(vec![n, 2], frame_rows(&rel))
                    .map_err(|e| wrap(e.into()))?;
                (pos, rel)
            }
        };
        let out = bound
            .advance(tape, &mut state, positions, nabs)
            .map_err(wrap)?;
        if step >= obs {
            predictions.push(out.offsets);
        }
        attention.push(out.attention);
        previous = Some(out.offsets);
    }
    Ok(GraphRollout {
        predictions,
        attention,
    })
}

/// Value-only rollout on a private tape.
pub fn rollout(
    params: &ModelParams,
    window: &TrajectoryWindow,
    mode: RolloutMode,
) -> Result<RolloutResult, PipelineError> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape, false);
    let graph = rollout_graph(&mut tape, &bound, window, mode)?;
    let n = window.num_peds();
    let anchors = window.frames[params.config().obs_len - 1].clone();
    let mut predicted_nabs = vec![Vec::with_capacity(graph.predictions.len()); n];
    for &v in &graph.predictions {
        for (k, row) in tape.value(v).chunks_exact(2).enumerate() {
            predicted_nabs[k].push([row[0], row[1]]);
        }
    }
    let predicted_abs = predicted_nabs
        .iter()
        .zip(&anchors)
        .map(|(offsets, &a)| nabs_decode(offsets, a))
        .collect();
    let attention_trace = graph
        .attention
        .iter()
        .enumerate()
        .filter_map(|(t, a)| {
            a.map(|v| AttentionStep {
                frame: t,
                weights: tape.value(v).chunks_exact(n).map(<[f64]>::to_vec).collect(),
            })
        })
        .collect();
    Ok(RolloutResult {
        ped_ids: window.ped_ids.clone(),
        anchors,
        predicted_nabs,
        predicted_abs,
        attention_trace,
    })
}

impl RolloutResult {
    /// Ground-truth Nabs future for each pedestrian of `window`.
    pub fn truth_nabs(window: &TrajectoryWindow, obs_len: usize) -> Vec<Vec<Point>> {
        (0..window.num_peds())
            .map(|k| {
                let track = window.track(k);
                let enc = nabs_encode(&track, obs_len - 1).expect("anchor inside window");
                enc[obs_len..].to_vec()
            })
            .collect()
    }
}
