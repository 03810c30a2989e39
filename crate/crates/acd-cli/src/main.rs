//! Command-line pipeline for polyphonic audio content detection under
//! noisy labels: dataset synthesis, training, teacher-based label
//! enhancement, evaluation and the end-to-end comparison experiment.

mod cache;
mod commands;
mod config;
mod runlog;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::load_config;

/// Error classified by exit code: 2 config, 3 data, 4 numeric failure.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
            CliError::Numeric(msg) => write!(f, "numeric failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<acd_core::synth::SynthError> for CliError {
    fn from(e: acd_core::synth::SynthError) -> Self {
        match e {
            acd_core::synth::SynthError::InvalidParams(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<acd_core::augment::AugmentError> for CliError {
    fn from(e: acd_core::augment::AugmentError) -> Self {
        match e {
            acd_core::augment::AugmentError::InvalidConfig(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<acd_core::model::TrainError> for CliError {
    fn from(e: acd_core::model::TrainError) -> Self {
        match e {
            acd_core::model::TrainError::InvalidConfig(_) => CliError::Config(e.to_string()),
            acd_core::model::TrainError::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
            acd_core::model::TrainError::Augment(
                acd_core::augment::AugmentError::InvalidConfig(_),
            ) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<acd_core::model::ModelError> for CliError {
    fn from(e: acd_core::model::ModelError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<acd_core::manifest::ManifestError> for CliError {
    fn from(e: acd_core::manifest::ManifestError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<acd_core::audio::AudioError> for CliError {
    fn from(e: acd_core::audio::AudioError) -> Self {
        match e {
            acd_core::audio::AudioError::InvalidConfig(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<acd_core::labels::LabelError> for CliError {
    fn from(e: acd_core::labels::LabelError) -> Self {
        match e {
            acd_core::labels::LabelError::ThresholdOutOfRange(_)
            | acd_core::labels::LabelError::PercentileOutOfRange(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<acd_core::metrics::MetricError> for CliError {
    fn from(e: acd_core::metrics::MetricError) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "acd",
    version,
    about = "Polyphonic audio content detection under noisy labels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Config file and field overrides shared by most subcommands.
#[derive(Args, Debug)]
struct ConfigArgs {
    /// JSON config file; built-in defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config field by dotted path, e.g. --set trainer.learning_rate=2e-4.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (WAVs, manifest, ground-truth sidecar).
    Synth {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
        /// Number of clips (defaults to data.train_clips).
        #[arg(long)]
        clips: Option<usize>,
    },
    /// Train a classifier on a manifest.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Training manifest (JSONL).
        #[arg(long)]
        manifest: PathBuf,
        /// Validation manifest (JSONL).
        #[arg(long)]
        val: PathBuf,
        /// Optional replacement-label manifest (same clip paths).
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Directory clip paths resolve against (defaults to the manifest's
        /// directory).
        #[arg(long)]
        data_root: Option<PathBuf>,
        /// Output directory for checkpoint.acdm and history.csv.
        #[arg(long)]
        out: PathBuf,
        /// Write the first N augmented training sequences as WAVs for
        /// inspection.
        #[arg(long, value_name = "N")]
        dump: Option<usize>,
    },
    /// Write per-clip predictions of a checkpoint as teacher JSONL.
    Predict {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        data_root: Option<PathBuf>,
        /// Output JSONL file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Enhance manifest labels using teacher predictions.
    Enhance {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        manifest: PathBuf,
        /// Teacher predictions JSONL ("probs" or raw "scores" rows).
        #[arg(long)]
        predictions: PathBuf,
        /// Label-processing mode (raw, corr-fn, corr-fn-fp, corr+mask-fn,
        /// corr+mask-fn-fp, percentile-mask, percentile-corr,
        /// meanthresh-corr).
        #[arg(long)]
        mode: String,
        /// Output directory for enhanced.jsonl and enhance_report.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on a manifest.
    Eval {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        data_root: Option<PathBuf>,
        /// Output directory for eval.json.
        #[arg(long)]
        out: PathBuf,
        /// Also write a per-class AP bar chart (ap.svg).
        #[arg(long)]
        svg: bool,
        /// Also write per-class precision-recall curves (pr.csv).
        #[arg(long)]
        pr_csv: bool,
    },
    /// Run the full comparison experiment across label-processing modes.
    Experiment {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Experiment seed (required).
        #[arg(long)]
        seed: u64,
        /// Output directory (defaults to output_dir from the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use external (e.g. zero-shot) teacher predictions instead of
        /// training a teacher; raw "scores" rows are softmax-normalized.
        #[arg(long)]
        teacher_predictions: Option<PathBuf>,
    },
    /// Re-render the comparison table of a finished experiment run.
    Report {
        /// Experiment output directory.
        #[arg(long)]
        run: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth {
            cfg,
            seed,
            out,
            clips,
        } => {
            let cfg = load_config(cfg.config.as_deref(), &cfg.set, seed)?;
            commands::cmd_synth(&cfg, &out, clips)
        }
        Command::Train {
            cfg,
            seed,
            manifest,
            val,
            labels,
            data_root,
            out,
            dump,
        } => {
            let cfg = load_config(cfg.config.as_deref(), &cfg.set, seed)?;
            commands::cmd_train(
                &cfg,
                &manifest,
                &val,
                labels.as_deref(),
                data_root.as_deref(),
                &out,
                dump,
            )
        }
        Command::Predict {
            cfg,
            checkpoint,
            manifest,
            data_root,
            out,
        } => {
            let cfg = load_config(cfg.config.as_deref(), &cfg.set, None)?;
            commands::cmd_predict(&cfg, &checkpoint, &manifest, data_root.as_deref(), &out)
        }
        Command::Enhance {
            cfg,
            manifest,
            predictions,
            mode,
            out,
        } => {
            let cfg = load_config(cfg.config.as_deref(), &cfg.set, None)?;
            let mode = config::Mode::parse(&mode)?;
            commands::cmd_enhance(&cfg, &manifest, &predictions, mode, &out)
        }
        Command::Eval {
            cfg,
            checkpoint,
            manifest,
            data_root,
            out,
            svg,
            pr_csv,
        } => {
            let cfg = load_config(cfg.config.as_deref(), &cfg.set, None)?;
            commands::cmd_eval(
                &cfg,
                &checkpoint,
                &manifest,
                data_root.as_deref(),
                &out,
                svg,
                pr_csv,
            )
        }
        Command::Experiment {
            cfg,
            seed,
            out,
            teacher_predictions,
        } => {
            let cfg = load_config(cfg.config.as_deref(), &cfg.set, Some(seed))?;
            commands::cmd_experiment(&cfg, out, teacher_predictions.as_deref())
        }
        Command::Report { run } => commands::cmd_report(&run),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
