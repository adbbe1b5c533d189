use alloc::vec::Vec;

use super::{Scene, TrajectoryWindow};

/// Sliding windows of `obs_len + pred_len` frames taken every `stride`
/// frames. A pedestrian is included only if present in every frame of the
/// window; windows with no such pedestrian are dropped.
pub fn build_windows(
    scene: &Scene,
    obs_len: usize,
    pred_len: usize,
    stride: usize,
) -> Vec<TrajectoryWindow> {
    let len = obs_len + pred_len;
    let stride = stride.max(1);
    let mut out = Vec::new();
    if len == 0 || scene.len() < len {
        return out;
    }
    for start in (0..=scene.len() - len).step_by(stride) {
        let span = &scene.frames[start..start + len];
        let ped_ids: Vec<u64> = span[0]
            .keys()
            .copied()
            .filter(|id| span.iter().all(|f| f.contains_key(id)))
            .collect();
        if ped_ids.is_empty() {
            continue;
        }
        let frames = span
            .iter()
            .map(|f| ped_ids.iter().map(|id| f[id]).collect())
            .collect();
        out.push(TrajectoryWindow {
            scene: scene.name.clone(),
            start_frame: start,
            ped_ids,
            frames,
        });
    }
    out
}

/// Rotates every position about the origin by `angle` radians.
pub fn rotate_window(window: &TrajectoryWindow, angle: f64) -> TrajectoryWindow {
    if angle == 0.0 {
        return window.clone();
    }
    let (s, c) = libm::sincos(angle);
    let mut out = window.clone();
    for p in out.frames.iter_mut().flatten() {
        *p = [c * p[0] - s * p[1], s * p[0] + c * p[1]];
    }
    out
}
