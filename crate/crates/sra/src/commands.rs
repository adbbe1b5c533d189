//! The `sra` subcommands. Each returns a [`CliError`] whose
//! [`exit_code`](CliError::exit_code) is the process status.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use sra_core::data::{
    build_windows, leave_one_out, synth_scenario, DataError, ScenarioKind, SynthParams,
    TrajectoryWindow,
};
use sra_core::diff::DiffError;
use sra_core::eval::{ablate, ade, fde};
use sra_core::model::{AttentionStrategy, ModelError};
use sra_core::pipeline::{
    l2_loss, prediction_targets, rollout, PipelineError, RolloutMode, Trainer,
};

use crate::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointError};
use crate::config::{ConfigFileError, Overrides, RunConfig};
use crate::dataset::{format_annotations, load_scene, load_scenes, DatasetError, LoadedScene};
use crate::report::{self, ATTENTION_HEADER, LOSSES_HEADER, PREDICTIONS_HEADER};
use crate::{evaluate_parallel, write_atomic};

pub const CHECKPOINT_FILE: &str = "checkpoint.sra";
pub const LOSS_LOG: &str = "loss.log";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigFileError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("writing {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
}

fn is_numeric(e: &PipelineError) -> bool {
    match e {
        PipelineError::Diff(DiffError::NonFinite { .. })
        | PipelineError::Model(ModelError::Diff(DiffError::NonFinite { .. }))
        | PipelineError::Step {
            source: ModelError::Diff(DiffError::NonFinite { .. }),
            ..
        } => true,
        PipelineError::Window { source, .. } => is_numeric(source),
        _ => false,
    }
}

impl CliError {
    /// 0 success, 1 usage or configuration, 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Output { .. } => 1,
            CliError::Checkpoint(CheckpointError::Params(_)) => 1,
            CliError::Data(DataError::UnknownScene(_)) => 1,
            CliError::Dataset(_) | CliError::Data(_) | CliError::Checkpoint(_) => 2,
            CliError::Pipeline(e) if is_numeric(e) => 3,
            CliError::Pipeline(PipelineError::Config(_)) => 1,
            CliError::Pipeline(_) => 2,
        }
    }
}

fn output_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Output {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    write_atomic(path, text.as_bytes()).map_err(output_err(path))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(output_err(dir))
}

/// Config file (or defaults) with flag overrides applied and validated.
pub fn resolve_config(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut config = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    config.apply(overrides);
    config.validate()?;
    Ok(config)
}

struct Prepared {
    train: Vec<TrajectoryWindow>,
    test: Vec<TrajectoryWindow>,
    scenes: Vec<LoadedScene>,
}

fn prepare(config: &RunConfig) -> Result<Prepared, CliError> {
    let scenes = load_scenes(&config.data)?;
    for s in &scenes {
        if s.dropped > 0 {
            eprintln!(
                "warning: {}: dropped {} pedestrian(s) with a single observation",
                s.scene.name, s.dropped
            );
        }
    }
    let plain: Vec<_> = scenes.iter().map(|s| s.scene.clone()).collect();
    let split = leave_one_out(
        &plain,
        &config.data.held_out,
        config.model.obs_len,
        config.model.pred_len,
        config.data.stride,
    )?;
    Ok(Prepared {
        train: split.train,
        test: split.test,
        scenes,
    })
}

fn loss_line(epoch: usize, loss: f64) -> String {
    format!("{epoch}\t{loss}\n")
}

/// Leave-one-out training. The loss log is written as `loss.log.partial`
/// while running and renamed when training completes.
pub fn cmd_train(config: &RunConfig) -> Result<(), CliError> {
    let data = prepare(config)?;
    if data.train.is_empty() {
        return Err(PipelineError::EmptyDataset.into());
    }
    ensure_dir(&config.out_dir)?;
    let final_log = config.out_dir.join(LOSS_LOG);
    let partial = config.out_dir.join(format!("{LOSS_LOG}.partial"));
    let ckpt_path = config.out_dir.join(CHECKPOINT_FILE);
    let mut log = File::create(&partial).map_err(output_err(&partial))?;

    let mut trainer = Trainer::new(config.model, config.train.train_config())?;
    let save_every = config.train.save_every;
    let mut failure = None;
    let result = trainer.fit(&data.train, |t, summary| {
        if failure.is_some() {
            return;
        }
        let line = loss_line(summary.epoch, summary.mean_loss);
        if let Err(e) = log.write_all(line.as_bytes()).and_then(|_| log.flush()) {
            failure = Some(CliError::Output {
                path: partial.clone(),
                source: e,
            });
            return;
        }
        println!(
            "epoch {:>4}  loss {:.6}  windows {}",
            summary.epoch, summary.mean_loss, summary.windows
        );
        if save_every > 0 && summary.epoch % save_every == 0 && summary.epoch < t.config.epochs {
            if let Err(e) = save_checkpoint(&ckpt_path, &checkpoint_of(t)) {
                failure = Some(e.into());
            }
        }
    });
    result?;
    if let Some(e) = failure {
        return Err(e);
    }
    drop(log);
    save_checkpoint(&ckpt_path, &checkpoint_of(&trainer))?;
    fs::rename(&partial, &final_log).map_err(output_err(&final_log))?;
    println!(
        "trained {} epochs on {} windows from {} scenes; checkpoint {}",
        trainer.epoch(),
        data.train.len(),
        data.scenes.len() - 1,
        ckpt_path.display()
    );
    Ok(())
}

fn checkpoint_of(t: &Trainer) -> Checkpoint {
    Checkpoint {
        params: t.params.clone(),
        epoch: t.epoch(),
        seed: t.config.seed,
        loss_history: t.history().to_vec(),
        adam: Some(t.adam.clone()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    /// The held-out scene.
    Test,
    /// Each training scene separately.
    Train,
}

fn checkpoint_path(config: &RunConfig, explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.out_dir.join(CHECKPOINT_FILE))
}

/// Evaluates a checkpoint and writes `eval.txt` and `eval.json`.
pub fn cmd_eval(
    config: &RunConfig,
    checkpoint: Option<&Path>,
    split: Split,
) -> Result<(), CliError> {
    let ckpt = load_checkpoint(&checkpoint_path(config, checkpoint))?;
    let params = ckpt.params_for(config.model)?;
    let data = prepare(config)?;
    let mut groups: Vec<(String, Vec<TrajectoryWindow>)> = Vec::new();
    match split {
        Split::Test => groups.push((config.data.held_out.clone(), data.test)),
        Split::Train => {
            for s in &data.scenes {
                if s.scene.name != config.data.held_out {
                    let w: Vec<_> = data
                        .train
                        .iter()
                        .filter(|w| w.scene == s.scene.name)
                        .cloned()
                        .collect();
                    groups.push((s.scene.name.clone(), w));
                }
            }
        }
    }
    let mut reports = Vec::new();
    for (scene, windows) in &groups {
        let (report, per_step) = evaluate_parallel(&params, scene, windows)?;
        println!(
            "{scene}: {} windows, ADE {:.4} m, FDE {:.4} m, {:.3e} s per step",
            report.window_count, report.ade, report.fde, per_step
        );
        reports.push(report);
    }
    ensure_dir(&config.out_dir)?;
    write_file(
        &config.out_dir.join("eval.txt"),
        &report::eval_table(&reports),
    )?;
    let json = serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n";
    write_file(&config.out_dir.join("eval.json"), &json)?;
    Ok(())
}

/// Trains and evaluates one model per strategy; writes `ablation.txt` and
/// `ablation.json`.
pub fn cmd_ablate(config: &RunConfig, strategies: &[AttentionStrategy]) -> Result<(), CliError> {
    let data = prepare(config)?;
    if data.train.is_empty() {
        return Err(PipelineError::EmptyDataset.into());
    }
    let strategies = if strategies.is_empty() {
        AttentionStrategy::ALL.to_vec()
    } else {
        strategies.to_vec()
    };
    let rows = ablate(
        &strategies,
        config.model,
        &config.train.train_config(),
        &config.data.held_out,
        &data.train,
        &data.test,
    )?;
    ensure_dir(&config.out_dir)?;
    let table = report::ablation_table(&config.data.held_out, &rows);
    print!("{table}");
    write_file(&config.out_dir.join("ablation.txt"), &table)?;
    let json = serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n";
    write_file(&config.out_dir.join("ablation.json"), &json)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emit {
    Trajectories,
    Attention,
    Loss,
}

/// Where `predict` takes its windows from.
#[derive(Debug, Clone, PartialEq)]
pub enum WindowSource {
    File(PathBuf),
    Synthetic {
        kind: ScenarioKind,
        seed: u64,
        params: SynthParams,
    },
}

pub struct PredictOptions<'a> {
    pub checkpoint: Option<&'a Path>,
    pub source: WindowSource,
    pub emit: Vec<Emit>,
    /// Treat the source as observations only: windows span `obs_len`
    /// frames and future truth columns stay empty.
    pub no_truth: bool,
}

/// Writes the requested plot data for every window of the source.
pub fn cmd_predict(config: &RunConfig, opts: &PredictOptions) -> Result<(), CliError> {
    let ckpt = load_checkpoint(&checkpoint_path(config, opts.checkpoint))?;
    let params = ckpt.params_for(config.model)?;
    let scene = match &opts.source {
        WindowSource::File(path) => {
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scene");
            load_scene(path, name, config.data.frame_dt)?.scene
        }
        WindowSource::Synthetic { kind, seed, params } => synth_scenario(*kind, params, *seed)?,
    };
    let (obs, pred) = (config.model.obs_len, config.model.pred_len);
    let emit = if opts.emit.is_empty() {
        vec![Emit::Trajectories]
    } else {
        opts.emit.clone()
    };
    if opts.no_truth && emit.contains(&Emit::Loss) {
        return Err(CliError::Usage(
            "--emit loss needs ground truth; drop --no-truth".into(),
        ));
    }
    let windows: Vec<TrajectoryWindow> = if opts.no_truth {
        // The future frames are placeholders: a free rollout never reads
        // ground truth past the last observed frame.
        build_windows(&scene, obs, 0, config.data.stride)
            .into_iter()
            .map(|mut w| {
                let last = w.frames[obs - 1].clone();
                w.frames.extend(std::iter::repeat_n(last, pred));
                w
            })
            .collect()
    } else {
        build_windows(&scene, obs, pred, config.data.stride)
    };
    if windows.is_empty() {
        return Err(PipelineError::EmptyDataset.into());
    }

    let mut trajectories = format!("{PREDICTIONS_HEADER}\n");
    let mut attention = format!("{ATTENTION_HEADER}\n");
    let mut losses = format!("{LOSSES_HEADER}\n");
    for w in &windows {
        let result = rollout(&params, w, RolloutMode::Free)?;
        report::prediction_rows(&mut trajectories, w, &result, obs, !opts.no_truth);
        report::attention_rows(&mut attention, w, &result);
        if emit.contains(&Emit::Loss) {
            let truth: Vec<Vec<_>> = (0..w.num_peds())
                .map(|k| w.frames[obs..].iter().map(|f| f[k]).collect())
                .collect();
            let loss = l2_loss(&result.predicted_nabs, &prediction_targets(w, obs))?;
            let a = ade(&result.predicted_abs, &truth).expect("aligned tracks");
            let f = fde(&result.predicted_abs, &truth).expect("aligned tracks");
            losses.push_str(&format!("{}\t{loss}\t{a}\t{f}\n", report::window_id(w)));
        }
    }
    ensure_dir(&config.out_dir)?;
    for (kind, name, text) in [
        (Emit::Trajectories, "predictions.tsv", &trajectories),
        (Emit::Attention, "attention.tsv", &attention),
        (Emit::Loss, "losses.tsv", &losses),
    ] {
        if emit.contains(&kind) {
            write_file(&config.out_dir.join(name), text)?;
        }
    }
    println!("{} windows from {}", windows.len(), scene.name);
    Ok(())
}

/// Writes a synthetic scene as an annotation file `<out>/<kind>.txt`.
pub fn cmd_synth(
    out_dir: &Path,
    kind: ScenarioKind,
    params: &SynthParams,
    seed: u64,
) -> Result<PathBuf, CliError> {
    let scene = synth_scenario(kind, params, seed)?;
    ensure_dir(out_dir)?;
    let path = out_dir.join(format!("{kind}.txt"));
    write_file(&path, &format_annotations(&scene))?;
    Ok(path)
}
