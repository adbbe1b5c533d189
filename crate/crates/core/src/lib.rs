//! Social relationship attention LSTM (SRA-LSTM) for pedestrian trajectory
//! prediction.
//!
//! The crate is `no_std` with `alloc`: it carries the differentiation core,
//! the model, rollout and training, data transforms and metrics. File IO,
//! checkpoints and the command line live in the companion `sra` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod data;
pub mod diff;
pub mod eval;
pub mod model;
pub mod pipeline;
#[cfg(test)]
mod testutil;

pub use data::{
    build_windows, leave_one_out, parse_annotations, regrid, rotate_window, synth_scenario,
    ScenarioKind, Scene, SynthParams, TrajectoryWindow,
};
pub use diff::{Adam, AdamConfig, DiffError, Parameters, Tape, Tensor, Var};
pub use eval::{ablate, ade, evaluate, fde, AblationRow, EvalReport};
pub use model::{
    nabs_decode, nabs_encode, param_count, AttentionStrategy, ModelConfig, ModelParams, Point,
    SceneState,
};
pub use pipeline::{rollout, RolloutMode, RolloutResult, TrainConfig, Trainer};
