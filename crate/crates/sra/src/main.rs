use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sra::commands::{self, CliError, Emit, PredictOptions, Split, WindowSource};
use sra::config::{Overrides, RunConfig};
use sra_core::data::{ScenarioKind, SynthParams};
use sra_core::model::AttentionStrategy;

/// SRA-LSTM pedestrian trajectory prediction.
#[derive(Parser)]
#[command(name = "sra", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scene held out for testing.
    #[arg(long)]
    held_out: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Attention strategy; repeat for `ablate` to pick a subset.
    #[arg(long, value_enum)]
    strategy: Vec<StrategyArg>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    None,
    Sa,
    Ra,
    Sra,
}

impl From<StrategyArg> for AttentionStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::None => AttentionStrategy::None,
            StrategyArg::Sa => AttentionStrategy::Soft,
            StrategyArg::Ra => AttentionStrategy::Relative,
            StrategyArg::Sra => AttentionStrategy::SocialRelationship,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitArg {
    Trajectories,
    Attention,
    Loss,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Test,
    Train,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Parallel,
    Merging,
    Following,
    Meeting,
    #[value(name = "group_avoid")]
    GroupAvoid,
}

impl From<KindArg> for ScenarioKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Parallel => ScenarioKind::Parallel,
            KindArg::Merging => ScenarioKind::Merging,
            KindArg::Following => ScenarioKind::Following,
            KindArg::Meeting => ScenarioKind::Meeting,
            KindArg::GroupAvoid => ScenarioKind::GroupAvoid,
        }
    }
}

#[derive(Args, Clone)]
struct SynthArgs {
    /// Scenario kind.
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Scenario parameters (TOML table of `SynthParams` fields).
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    heading: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Leave-one-out training; writes a checkpoint and loss log.
    Train(Common),
    /// Evaluates a checkpoint; writes eval.txt and eval.json.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
    },
    /// Trains and evaluates one model per attention strategy.
    Ablate(Common),
    /// Writes predicted trajectories and attention weights as TSV.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Annotation file to predict on.
        #[arg(long, conflicts_with = "kind")]
        scene: Option<PathBuf>,
        #[command(flatten)]
        synth: Option<SynthArgs>,
        #[arg(long, value_enum)]
        emit: Vec<EmitArg>,
        /// Predict from observations only; leaves truth columns empty.
        #[arg(long)]
        no_truth: bool,
    },
    /// Writes a synthetic scene as an annotation file.
    Synth {
        #[command(flatten)]
        synth: SynthArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn overrides(c: &Common, single_strategy: bool) -> Result<Overrides, CliError> {
    if single_strategy && c.strategy.len() > 1 {
        return Err(CliError::Usage(
            "--strategy may be given once for this command".into(),
        ));
    }
    Ok(Overrides {
        held_out: c.held_out.clone(),
        seed: c.seed,
        epochs: c.epochs,
        strategy: c.strategy.first().map(|&s| s.into()),
        out_dir: c.out.clone(),
    })
}

fn config(c: &Common, single_strategy: bool) -> Result<RunConfig, CliError> {
    commands::resolve_config(c.config.as_deref(), &overrides(c, single_strategy)?)
}

fn synth_params(a: &SynthArgs) -> Result<SynthParams, CliError> {
    let mut p = match &a.params {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("reading {}: {e}", path.display())))?;
            toml::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => SynthParams::default(),
    };
    if let Some(f) = a.frames {
        p.frames = f;
    }
    if let Some(n) = a.noise {
        p.noise = n;
    }
    if let Some(h) = a.heading {
        p.heading = h;
    }
    Ok(p)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(c) => commands::cmd_train(&config(&c, true)?),
        Command::Eval {
            common,
            checkpoint,
            split,
        } => {
            let split = match split {
                SplitArg::Test => Split::Test,
                SplitArg::Train => Split::Train,
            };
            commands::cmd_eval(&config(&common, true)?, checkpoint.as_deref(), split)
        }
        Command::Ablate(c) => {
            let mut cfg = config(&c, false)?;
            // the strategy flags select rows here, not the base model
            cfg.model.strategy = AttentionStrategy::SocialRelationship;
            let strategies: Vec<AttentionStrategy> = c.strategy.iter().map(|&s| s.into()).collect();
            commands::cmd_ablate(&cfg, &strategies)
        }
        Command::Predict {
            common,
            checkpoint,
            scene,
            synth,
            emit,
            no_truth,
        } => {
            let cfg = config(&common, true)?;
            let source = match (scene, synth) {
                (Some(path), _) => WindowSource::File(path),
                (None, Some(s)) => WindowSource::Synthetic {
                    kind: s.kind.into(),
                    seed: common.seed.unwrap_or(0),
                    params: synth_params(&s)?,
                },
                (None, None) => {
                    return Err(CliError::Usage(
                        "predict needs --scene FILE or --kind KIND".into(),
                    ))
                }
            };
            let emit = emit
                .into_iter()
                .map(|e| match e {
                    EmitArg::Trajectories => Emit::Trajectories,
                    EmitArg::Attention => Emit::Attention,
                    EmitArg::Loss => Emit::Loss,
                })
                .collect();
            commands::cmd_predict(
                &cfg,
                &PredictOptions {
                    checkpoint: checkpoint.as_deref(),
                    source,
                    emit,
                    no_truth,
                },
            )
        }
        Command::Synth { synth, seed, out } => {
            let path = commands::cmd_synth(
                &out,
                synth.kind.into(),
                &synth_params(&synth)?,
                seed.unwrap_or(0),
            )?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
