use lexiscreen::eval::{
    bootstrap_evaluate, calibration_curve, cross_validate, group_metrics, spearman, EvalError, EvalReport, Grouping,
};
use lexiscreen::{Samples, Task};

use super::{dataset, feature_table, forest_params, model_failure, task, write_predictions, Context};
use crate::artifacts::{Artifacts, Stamp};
use crate::config::Settings;
use crate::error::{eval_status, Failure, Outcome};
use crate::EvaluateArgs;

fn eval_failure(e: EvalError, what: &str) -> Failure {
    Failure::new(eval_status(&e), anyhow::Error::new(e).context(what.to_string()))
}

pub fn run(ctx: &Context, settings: &mut Settings, args: &EvaluateArgs) -> Outcome<()> {
    let task = task(settings, args.forest.task.as_deref())?;
    let train_data = dataset(&settings.required_input("train-data", args.train_data.clone())?)?;
    let train_table = feature_table(&settings.required_input("train-features", args.train_features.clone())?)?;
    let test_data = dataset(&settings.required_input("test-data", args.test_data.clone())?)?;
    let test_table = feature_table(&settings.required_input("test-features", args.test_features.clone())?)?;
    if train_table.fingerprint() != test_table.fingerprint() {
        return Err(Failure::data(format!(
            "training features use schema {} but test features use {}",
            train_table.fingerprint(),
            test_table.fingerprint()
        )));
    }
    let train = Samples::from_table(&train_table, &train_data, task).map_err(|e| model_failure(e, || "training samples".to_string()))?;
    let test = Samples::from_table(&test_table, &test_data, task).map_err(|e| model_failure(e, || "test samples".to_string()))?;
    let params = forest_params(settings, &args.forest, task, train.n_features())?;
    let k = settings.value("folds", args.folds, 10usize)?;
    if k == 1 {
        return Err(Failure::usage("--folds must be 0 or at least 2"));
    }
    let repeats = settings.value("repeats", args.repeats, 10usize)?;
    let bins = settings.value("bins", args.bins, 10usize)?;
    let seed = settings.seed();

    let cv = if k > 0 {
        Some(cross_validate(&train, task, &params, k, seed).map_err(|e| eval_failure(e, "cross-validation failed"))?)
    } else {
        None
    };
    let ci = bootstrap_evaluate(&train, &test, task, &params, repeats, seed).map_err(|e| eval_failure(e, "bootstrap evaluation failed"))?;
    let predictions = ci.mean_prediction();

    let stamp = Stamp::of(settings);
    let mut report = EvalReport::new(task, params, cv.as_ref(), &ci);
    report.seed = stamp.seed;
    report.config_hash = stamp.config_hash.clone();

    let mut out = Artifacts::create(&ctx.out_dir)?;
    if task == Task::Classify {
        let curve = calibration_curve(&predictions, &test.labels(), bins).map_err(|e| eval_failure(e, "calibration failed"))?;
        out.write_csv("calibration.csv", |buf| curve.write_csv(buf))?;
        report = report.with_calibration(&curve);
        let mut groups = Vec::new();
        for g in Grouping::ALL {
            match group_metrics(&test_data, &test.ids, &predictions, g) {
                Ok(r) => groups.push(r),
                Err(e) => log::warn!("skipping {} group metrics: {e}", g.as_str()),
            }
        }
        report = report.with_groups(groups);
    }
    let (scored, mmse): (Vec<f64>, Vec<f64>) = test
        .ids
        .iter()
        .zip(&predictions)
        .filter_map(|(id, &p)| test_data.get(id).and_then(|r| r.mmse).map(|m| (p, f64::from(m))))
        .unzip();
    report.score_mmse_spearman = spearman(&scored, &mmse).ok();

    out.write_csv("predictions.csv", |buf| write_predictions(buf, task, &test.ids, &predictions))?;
    out.write("report.json", report.to_json().as_bytes())?;
    out.finish(settings)?;
    Ok(())
}
