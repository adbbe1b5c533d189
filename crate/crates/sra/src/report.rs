//! Text tables and tab-separated plot data.
//!
//! Every TSV file starts with a one-line header. Columns are separated by
//! single tabs (shown as spaces below). Missing values are empty
//! fields. Numbers use the shortest decimal form that reads back to the
//! same `f64`.
//!
//! `predictions.tsv`, one row per pedestrian and window frame:
//!
//! ```text
//! window  ped_id  frame  phase  x  y  x_pred  y_pred
//! parallel@0  0  7  obs  3.36  0
//! parallel@0  0  8  pred  3.84  0  3.8391  0.0012
//! ```
//!
//! `attention.tsv`, one row per ordered pair and step:
//!
//! ```text
//! window  frame  ped_id  neighbor_id  alpha
//! parallel@0  0  0  1  1
//! ```
//!
//! `frame` in `attention.tsv` is the input frame of the step.

use std::fmt::Write;

use sra_core::data::TrajectoryWindow;
use sra_core::eval::{AblationRow, EvalReport};
use sra_core::pipeline::RolloutResult;

pub const PREDICTIONS_HEADER: &str = "window\tped_id\tframe\tphase\tx\ty\tx_pred\ty_pred";
pub const ATTENTION_HEADER: &str = "window\tframe\tped_id\tneighbor_id\talpha";
pub const LOSSES_HEADER: &str = "window\tl2_loss\tade\tfde";

pub fn window_id(w: &TrajectoryWindow) -> String {
    format!("{}@{}", w.scene, w.start_frame)
}

pub fn eval_table(reports: &[EvalReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.scene.len())
        .max()
        .unwrap_or(0)
        .max(5);
    let mut out = format!(
        "{:<width$}  {:>7}  {:>8}  {:>8}\n",
        "scene", "windows", "ADE(m)", "FDE(m)"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<width$}  {:>7}  {:>8.4}  {:>8.4}",
            r.scene, r.window_count, r.ade, r.fde
        );
    }
    out
}

pub fn ablation_table(scene: &str, rows: &[AblationRow]) -> String {
    let mut out = format!("# held-out scene: {scene}\n");
    let _ = writeln!(
        out,
        "{:<8}  {:>8}  {:>8}  {:>10}",
        "strategy", "ADE(m)", "FDE(m)", "train_loss"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<8}  {:>8.4}  {:>8.4}  {:>10.4}",
            r.strategy.as_str(),
            r.ade,
            r.fde,
            r.final_loss
        );
    }
    out
}

/// Rows for one window. `truth_known` false leaves future truth empty.
pub fn prediction_rows(
    out: &mut String,
    window: &TrajectoryWindow,
    result: &RolloutResult,
    obs_len: usize,
    truth_known: bool,
) {
    let id = window_id(window);
    for (k, ped) in window.ped_ids.iter().enumerate() {
        for (t, frame) in window.frames.iter().enumerate() {
            let frame_no = window.start_frame + t;
            if t < obs_len {
                let p = frame[k];
                let _ = writeln!(out, "{id}\t{ped}\t{frame_no}\tobs\t{}\t{}\t\t", p[0], p[1]);
            } else {
                let pred = result.predicted_abs[k][t - obs_len];
                let truth = if truth_known {
                    format!("{}\t{}", frame[k][0], frame[k][1])
                } else {
                    String::from("\t")
                };
                let _ = writeln!(
                    out,
                    "{id}\t{ped}\t{frame_no}\tpred\t{truth}\t{}\t{}",
                    pred[0], pred[1]
                );
            }
        }
    }
}

pub fn attention_rows(out: &mut String, window: &TrajectoryWindow, result: &RolloutResult) {
    let id = window_id(window);
    for step in &result.attention_trace {
        let frame_no = window.start_frame + step.frame;
        for (i, row) in step.weights.iter().enumerate() {
            for (j, alpha) in row.iter().enumerate() {
                if i != j {
                    let _ = writeln!(
                        out,
                        "{id}\t{frame_no}\t{}\t{}\t{alpha}",
                        window.ped_ids[i], window.ped_ids[j]
                    );
                }
            }
        }
    }
}
