//! Subcommand implementations and the loaders they share.

pub mod evaluate;
pub mod explain;
pub mod extract;
pub mod predict;
pub mod stratify;
pub mod synth;
pub mod train;

use std::path::{Path, PathBuf};

use lexiscreen::corpus::{load_dataset, Format};
use lexiscreen::models::{load_model, ForestModel, ModelError};
use lexiscreen::{Dataset, FeatureTable, ForestParams, Task};

use crate::config::Settings;
use crate::error::{model_status, Failure, Outcome, Tag};
use crate::ForestArgs;

pub struct Context {
    pub out_dir: PathBuf,
}

pub fn dataset(path: &Path) -> Outcome<Dataset> {
    load_dataset(path, Format::from_path(path)).data(|| format!("cannot load records from {}", path.display()))
}

pub fn feature_table(path: &Path) -> Outcome<FeatureTable> {
    let file = std::fs::File::open(path).data(|| format!("cannot open {}", path.display()))?;
    FeatureTable::read_csv(std::io::BufReader::new(file)).data(|| format!("cannot read feature table {}", path.display()))
}

pub fn model(path: &Path) -> Outcome<ForestModel> {
    load_model(path).map_err(|e| model_failure(e, || format!("cannot load model {}", path.display())))
}

pub fn model_failure(e: ModelError, context: impl FnOnce() -> String) -> Failure {
    Failure::new(model_status(&e), anyhow::Error::new(e).context(context()))
}

pub fn task(settings: &mut Settings, cli: Option<&str>) -> Outcome<Task> {
    let raw = settings.value("task", cli.map(str::to_string), "classify".to_string())?;
    raw.parse::<Task>().map_err(|e| Failure::usage(format!("--task: {e}")))
}

/// Task defaults overridden by command line or config values.
pub fn forest_params(settings: &mut Settings, args: &ForestArgs, task: Task, n_features: usize) -> Outcome<ForestParams> {
    let d = ForestParams::defaults(task, n_features);
    let p = ForestParams {
        n_trees: settings.value("n-trees", args.n_trees, d.n_trees)?,
        max_depth: settings.value("max-depth", args.max_depth, d.max_depth)?,
        min_samples_split: settings.value("min-samples-split", args.min_samples_split, d.min_samples_split)?,
        min_samples_leaf: settings.value("min-samples-leaf", args.min_samples_leaf, d.min_samples_leaf)?,
        features_per_split: settings.value("features-per-split", args.features_per_split, d.features_per_split)?,
    };
    p.validate(n_features).map_err(|e| model_failure(e, || "invalid forest parameters".to_string()))?;
    Ok(p)
}

/// `id,score,label` for classification, `id,prediction,mmse` for regression.
pub fn write_predictions(out: &mut Vec<u8>, task: Task, ids: &[String], scores: &[f64]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    match task {
        Task::Classify => w.write_record(["id", "score", "label"])?,
        Task::Regress => w.write_record(["id", "prediction", "mmse"])?,
    }
    for (id, &s) in ids.iter().zip(scores) {
        let derived = match task {
            Task::Classify => u8::from(s > lexiscreen::models::LABEL_THRESHOLD).to_string(),
            Task::Regress => lexiscreen::models::report_mmse(s).to_string(),
        };
        w.write_record([id.clone(), s.to_string(), derived])?;
    }
    w.flush()?;
    Ok(())
}
