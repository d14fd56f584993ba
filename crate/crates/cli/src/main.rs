//! `lexiscreen` command-line pipeline.
//!
//! Exit statuses: 0 success, 2 usage or configuration error, 3 input data
//! error, 4 model error, 5 internal error.

mod artifacts;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Settings;
use crate::error::{Failure, Outcome};

#[derive(Parser, Debug)]
#[command(name = "lexiscreen", version, about = "Transcript screening: features, forests, explanations, evaluation and risk bands")]
struct Cli {
    /// Base seed for every random stream [default: 42].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Config file with `key = value` lines and `[command]` sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: out].
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labelled synthetic corpus with planted linguistic signal.
    Synth(SynthArgs),
    /// Turn transcripts into a feature table.
    Extract(ExtractArgs),
    /// Fit a random forest, optionally after a hyperparameter search.
    Train(TrainArgs),
    /// Random hyperparameter search scored by cross-validation.
    Tune(TuneArgs),
    /// Score a feature table with a saved model.
    Predict(PredictArgs),
    /// TreeSHAP attributions, global importance and per-record breakdowns.
    Explain(ExplainArgs),
    /// Cross-validation, bootstrap intervals, calibration and group metrics.
    Evaluate(EvaluateArgs),
    /// Assign Green/Amber/Red bands, or search for band thresholds.
    Stratify(StratifyArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Positive records [default: 200].
    #[arg(long)]
    pub n_positive: Option<i64>,
    /// Negative records [default: 200].
    #[arg(long)]
    pub n_negative: Option<i64>,
    /// Give both classes the same profile, so no feature carries signal.
    #[arg(long)]
    pub null: bool,
    /// Record id prefix [default: syn].
    #[arg(long)]
    pub id_prefix: Option<String>,
    /// Output file name inside the output directory [default: corpus.jsonl].
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// Transcripts (`.jsonl` or `.csv`).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Dictionary file [default: bundled demo dictionary].
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Part-of-speech word list [default: bundled].
    #[arg(long)]
    pub pos: Option<PathBuf>,
    /// Feature schema [default: bundled 100-feature schema].
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Drop failing records instead of aborting.
    #[arg(long)]
    pub skip_bad: bool,
    /// Output file name [default: features.csv].
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct ForestArgs {
    /// `classify` (diagnosis) or `regress` (MMSE) [default: classify].
    #[arg(long)]
    pub task: Option<String>,
    /// Trees in the forest [default: 50].
    #[arg(long)]
    pub n_trees: Option<usize>,
    /// Maximum tree depth [default: 16].
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Smallest node that may be split [default: 2].
    #[arg(long)]
    pub min_samples_split: Option<usize>,
    /// Smallest allowed leaf [default: 1].
    #[arg(long)]
    pub min_samples_leaf: Option<usize>,
    /// Candidate features per split [default: sqrt(p) or p/3].
    #[arg(long)]
    pub features_per_split: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Labelled records.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Feature table from `extract`.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[command(flatten)]
    pub forest: ForestArgs,
    /// Cross-validation folds; 0 skips cross-validation [default: 10].
    #[arg(long)]
    pub folds: Option<usize>,
    /// Random-search trials before the final fit; omit for fixed parameters.
    #[arg(long)]
    pub search_budget: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// `classify` or `regress` [default: classify].
    #[arg(long)]
    pub task: Option<String>,
    /// Folds per trial [default: 10].
    #[arg(long)]
    pub folds: Option<usize>,
    /// Trials [default: 20].
    #[arg(long)]
    pub search_budget: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Model file from `train`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Output file name [default: predictions.csv].
    #[arg(long)]
    pub output: Option<String>,
}

#[derive(Args, Debug)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Records to explain.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Training feature table used to standardize breakdown values
    /// [default: the explained table].
    #[arg(long)]
    pub reference_features: Option<PathBuf>,
    /// Contributions listed per record in breakdown.csv [default: 10].
    #[arg(long)]
    pub top_k: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub train_data: Option<PathBuf>,
    #[arg(long)]
    pub train_features: Option<PathBuf>,
    #[arg(long)]
    pub test_data: Option<PathBuf>,
    #[arg(long)]
    pub test_features: Option<PathBuf>,
    #[command(flatten)]
    pub forest: ForestArgs,
    /// Cross-validation folds on the training set; 0 skips [default: 10].
    #[arg(long)]
    pub folds: Option<usize>,
    /// Bootstrap repeats [default: 10].
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Calibration bins [default: 10].
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Args, Debug)]
pub struct StratifyArgs {
    /// Predictions with `id` and `score` columns.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Records supplying labels (needed for search) and MMSE tables.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Upper bound of the Green band [default: 0.45].
    #[arg(long)]
    pub green: Option<f64>,
    /// Upper bound of the Amber band [default: 0.65].
    #[arg(long)]
    pub amber: Option<f64>,
    /// Search the threshold grid instead of applying fixed thresholds.
    #[arg(long)]
    pub search: bool,
    /// Grid spacing for the search [default: 0.1].
    #[arg(long)]
    pub resolution: Option<f64>,
    /// Smallest acceptable share of non-Amber records [default: 0.5].
    #[arg(long)]
    pub min_coverage: Option<f64>,
    /// Folds for the cross-validated search [default: 10].
    #[arg(long)]
    pub folds: Option<usize>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Extract(_) => "extract",
            Command::Train(_) => "train",
            Command::Tune(_) => "tune",
            Command::Predict(_) => "predict",
            Command::Explain(_) => "explain",
            Command::Evaluate(_) => "evaluate",
            Command::Stratify(_) => "stratify",
        }
    }
}

fn run(cli: Cli) -> Outcome<()> {
    let mut settings = Settings::load(cli.command.name(), cli.config.as_deref(), cli.seed)?;
    if let Some(n) = settings.unrecorded::<usize>("threads", cli.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::new(error::Status::Internal, e))?;
    }
    let out_dir = settings.unrecorded::<PathBuf>("out-dir", cli.out_dir)?.unwrap_or_else(|| PathBuf::from("out"));
    let ctx = commands::Context { out_dir };
    match &cli.command {
        Command::Synth(a) => commands::synth::run(&ctx, &mut settings, a),
        Command::Extract(a) => commands::extract::run(&ctx, &mut settings, a),
        Command::Train(a) => commands::train::run(&ctx, &mut settings, a),
        Command::Tune(a) => commands::train::tune(&ctx, &mut settings, a),
        Command::Predict(a) => commands::predict::run(&ctx, &mut settings, a),
        Command::Explain(a) => commands::explain::run(&ctx, &mut settings, a),
        Command::Evaluate(a) => commands::evaluate::run(&ctx, &mut settings, a),
        Command::Stratify(a) => commands::stratify::run(&ctx, &mut settings, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
