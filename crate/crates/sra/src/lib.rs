//! Std companion of `sra-core`: checkpoint files, annotation files, run
//! configuration, reports and the commands behind the `sra` binary.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod report;

use std::fs;
use std::io;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use sra_core::data::TrajectoryWindow;
use sra_core::eval::{evaluate_window, EvalReport};
use sra_core::model::ModelParams;
use sra_core::pipeline::PipelineError;

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

/// Evaluates windows on the rayon pool. Records keep input order, so the
/// report is identical to the sequential one. Also returns the mean wall
/// time of one model step.
pub fn evaluate_parallel(
    params: &ModelParams,
    scene: &str,
    windows: &[TrajectoryWindow],
) -> Result<(EvalReport, f64), PipelineError> {
    let start = Instant::now();
    let records = windows
        .par_iter()
        .map(|w| evaluate_window(params, w))
        .collect::<Result<Vec<_>, _>>()?;
    let steps = windows.len() * (params.config().window_len() - 1);
    let per_step = start.elapsed().as_secs_f64() / steps.max(1) as f64;
    Ok((EvalReport::from_records(scene, records), per_step))
}
