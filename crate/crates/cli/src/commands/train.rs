use serde::Serialize;

use lexiscreen::eval::{cross_validate, random_search, CvReport, ParamSpace, SearchReport};
use lexiscreen::models::fit_forest;
use lexiscreen::{ForestParams, Samples, Task};

use super::{dataset, feature_table, forest_params, model_failure, task, Context};
use crate::artifacts::{Artifacts, Stamp};
use crate::config::Settings;
use crate::error::{eval_status, Failure, Outcome};
use crate::{TrainArgs, TuneArgs};

#[derive(Serialize)]
struct TrainReport<'a> {
    #[serde(flatten)]
    stamp: Stamp,
    task: Task,
    n_samples: usize,
    params: &'a ForestParams,
    cv: Option<&'a CvReport>,
    search: Option<&'a SearchReport>,
}

fn eval_failure(e: lexiscreen::eval::EvalError, what: &str) -> Failure {
    Failure::new(eval_status(&e), anyhow::Error::new(e).context(what.to_string()))
}

fn samples(settings: &mut Settings, data: Option<std::path::PathBuf>, features: Option<std::path::PathBuf>, task: Task) -> Outcome<Samples> {
    let data = settings.required_input("data", data)?;
    let features = settings.required_input("features", features)?;
    let records = dataset(&data)?;
    let table = feature_table(&features)?;
    Samples::from_table(&table, &records, task).map_err(|e| model_failure(e, || "cannot assemble training samples".to_string()))
}

fn folds(settings: &mut Settings, cli: Option<usize>, allow_zero: bool) -> Outcome<usize> {
    let k = settings.value("folds", cli, 10)?;
    match k {
        0 if allow_zero => Ok(0),
        1 => Err(Failure::usage("--folds must be at least 2")),
        0 => Err(Failure::usage("--folds must be at least 2")),
        k => Ok(k),
    }
}

fn search(settings: &mut Settings, samples: &Samples, task: Task, budget: usize, k: usize) -> Outcome<SearchReport> {
    if budget == 0 {
        return Err(Failure::usage("--search-budget must be at least 1"));
    }
    if k == 0 {
        return Err(Failure::usage("a hyperparameter search needs --folds >= 2"));
    }
    let space = ParamSpace::defaults(task, samples.n_features());
    random_search(samples, task, &space, budget, k, settings.seed()).map_err(|e| eval_failure(e, "hyperparameter search failed"))
}

pub fn run(ctx: &Context, settings: &mut Settings, args: &TrainArgs) -> Outcome<()> {
    let task = task(settings, args.forest.task.as_deref())?;
    let samples = samples(settings, args.data.clone(), args.features.clone(), task)?;
    let k = folds(settings, args.folds, true)?;
    let budget = settings.optional("search-budget", args.search_budget)?;
    let (params, search_report, cv) = match budget {
        Some(budget) => {
            let report = search(settings, &samples, task, budget, k)?;
            let cv = report.best_cv().clone();
            (report.best.clone(), Some(report), Some(cv))
        }
        None => {
            let params = forest_params(settings, &args.forest, task, samples.n_features())?;
            let cv = if k > 0 {
                Some(cross_validate(&samples, task, &params, k, settings.seed()).map_err(|e| eval_failure(e, "cross-validation failed"))?)
            } else {
                None
            };
            (params, None, cv)
        }
    };
    let mut model = fit_forest(&samples, task, &params, settings.seed()).map_err(|e| model_failure(e, || "training failed".to_string()))?;
    let stamp = Stamp::of(settings);
    model.metadata.insert("config_hash".into(), stamp.config_hash.clone().into());
    model.metadata.insert("n_samples".into(), samples.len().into());

    let mut out = Artifacts::create(&ctx.out_dir)?;
    out.write("model.json", model.to_json().as_bytes())?;
    out.write_json(
        "train_report.json",
        &TrainReport {
            stamp,
            task,
            n_samples: samples.len(),
            params: &params,
            cv: cv.as_ref(),
            search: search_report.as_ref(),
        },
    )?;
    out.finish(settings)?;
    Ok(())
}

#[derive(Serialize)]
struct TuneReport<'a> {
    #[serde(flatten)]
    stamp: Stamp,
    task: Task,
    n_samples: usize,
    folds: usize,
    space: &'a ParamSpace,
    search: &'a SearchReport,
}

pub fn tune(ctx: &Context, settings: &mut Settings, args: &TuneArgs) -> Outcome<()> {
    let task = task(settings, args.task.as_deref())?;
    let samples = samples(settings, args.data.clone(), args.features.clone(), task)?;
    let k = folds(settings, args.folds, false)?;
    let budget = settings.value("search-budget", args.search_budget, 20)?;
    let report = search(settings, &samples, task, budget, k)?;
    let mut out = Artifacts::create(&ctx.out_dir)?;
    out.write_json(
        "tune_report.json",
        &TuneReport {
            stamp: Stamp::of(settings),
            task,
            n_samples: samples.len(),
            folds: k,
            space: &ParamSpace::defaults(task, samples.n_features()),
            search: &report,
        },
    )?;
    out.finish(settings)?;
    Ok(())
}
