//! Annotation ingestion, time regridding, sliding windows, augmentation,
//! leave-one-out splits and synthetic scenarios.

mod parse;
mod regrid;
mod split;
mod synth;
mod window;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::model::Point;

pub use parse::parse_annotations;
pub use regrid::{regrid, Regridded, KEY_FRAME_DT};
pub use split::{leave_one_out, Split, SCENE_NAMES};
pub use synth::{synth_scenario, ScenarioKind, SynthParams};
pub use window::{build_windows, rotate_window};

/// One line of an annotation file: a pedestrian position at a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawAnnotation {
    pub frame_id: i64,
    pub ped_id: u64,
    pub x: f64,
    pub y: f64,
}

/// A scene on a uniform time grid. `frames[k]` holds the positions at time
/// `start_time + k·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub name: String,
    pub dt: f64,
    pub start_time: f64,
    pub frames: Vec<BTreeMap<u64, Point>>,
}

impl Scene {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Distinct pedestrian ids, ascending.
    pub fn ped_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.frames.iter().flat_map(|f| f.keys().copied()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Rows of `(frame, ped_id, x, y)` in frame order, then id order.
    pub fn to_annotations(&self) -> Vec<RawAnnotation> {
        let mut out = Vec::new();
        for (k, frame) in self.frames.iter().enumerate() {
            for (&ped_id, p) in frame {
                out.push(RawAnnotation {
                    frame_id: k as i64,
                    ped_id,
                    x: p[0],
                    y: p[1],
                });
            }
        }
        out
    }
}

/// Aligned positions of the pedestrians present in every frame of a
/// slice of a scene. `frames[t][k]` is pedestrian `ped_ids[k]` at frame
/// `start_frame + t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryWindow {
    pub scene: String,
    pub start_frame: usize,
    pub ped_ids: Vec<u64>,
    pub frames: Vec<Vec<Point>>,
}

impl TrajectoryWindow {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn num_peds(&self) -> usize {
        self.ped_ids.len()
    }

    /// Track of pedestrian `k` across the window.
    pub fn track(&self, k: usize) -> Vec<Point> {
        self.frames.iter().map(|f| f[k]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate annotation for frame {frame_id}, pedestrian {ped_id}")]
    Duplicate {
        line: usize,
        frame_id: i64,
        ped_id: u64,
    },
    #[error("source timestep must be positive and finite, got {0}")]
    BadTimestep(f64),
    #[error("unknown scene `{0}`")]
    UnknownScene(String),
    #[error("unknown scenario kind `{0}`")]
    UnknownScenario(String),
    #[error("invalid scenario parameter: {0}")]
    InvalidParameter(&'static str),
}
