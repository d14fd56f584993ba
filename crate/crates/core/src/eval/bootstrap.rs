use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::cv::summarize;
use super::metrics::{classification_metrics, regression_metrics};
use super::{EvalError, Metrics};
use crate::models::{fit_forest, ForestParams, Samples, Task, LABEL_THRESHOLD};
use crate::rng;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.96;

/// Interval construction recorded in every report.
pub const CI_METHOD: &str = "normal approximation: mean +/- 1.96 * sample sd (n-1) over bootstrap repeats";

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricCi {
    pub mean: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CiReport {
    pub repeats: usize,
    pub method: &'static str,
    pub metrics: BTreeMap<String, MetricCi>,
    pub per_repeat: Vec<Metrics>,
    /// Test-set predictions of each repeat, in test order.
    #[serde(skip)]
    pub predictions: Vec<Vec<f64>>,
}

impl CiReport {
    /// Per-row mean over repeats.
    pub fn mean_prediction(&self) -> Vec<f64> {
        let n = self.predictions.first().map_or(0, Vec::len);
        (0..n)
            .map(|i| self.predictions.iter().map(|p| p[i]).sum::<f64>() / self.repeats as f64)
            .collect()
    }
}

fn domain(metric: &str) -> (f64, f64) {
    match metric {
        "mae" | "rmse" => (0.0, f64::INFINITY),
        _ => (0.0, 1.0),
    }
}

/// Refit on `repeats` bootstrap resamples of the training set and score
/// each refit on the fixed test set. Repeat `r` resamples the id-sorted
/// training rows with seed `mix(seed, r)` and fits with the same seed.
pub fn bootstrap_evaluate(
    train: &Samples,
    test: &Samples,
    task: Task,
    params: &ForestParams,
    repeats: usize,
    seed: u64,
) -> Result<CiReport, EvalError> {
    if repeats < 2 {
        return Err(EvalError::InvalidArgument(format!("at least 2 bootstrap repeats are required, got {repeats}")));
    }
    if train.is_empty() {
        return Err(EvalError::TooShort { need: 1, got: 0 });
    }
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.sort_by(|&a, &b| train.ids[a].cmp(&train.ids[b]));
    let canonical = train.subset(&order);
    let labels = test.labels();
    let runs: Vec<(Metrics, Vec<f64>)> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let s = rng::mix(seed, r as u64);
            let sample = canonical.subset(&rng::bootstrap_indices(canonical.len(), s));
            let model = fit_forest(&sample, task, params, s)?;
            let predictions = model.predict_samples(test)?;
            let metrics = match task {
                Task::Classify => Metrics::Classification(classification_metrics(&predictions, &labels, LABEL_THRESHOLD)?),
                Task::Regress => Metrics::Regression(regression_metrics(&test.targets, &predictions)?),
            };
            Ok((metrics, predictions))
        })
        .collect::<Result<_, EvalError>>()?;
    let (per_repeat, predictions): (Vec<Metrics>, Vec<Vec<f64>>) = runs.into_iter().unzip();
    let metrics = summarize(per_repeat.iter())
        .into_iter()
        .map(|(name, m)| {
            let (lo, hi) = domain(&name);
            let ci = MetricCi {
                mean: m.mean,
                sd: m.sd,
                ci_low: (m.mean - Z_95 * m.sd).clamp(lo, hi),
                ci_high: (m.mean + Z_95 * m.sd).clamp(lo, hi),
            };
            (name, ci)
        })
        .collect();
    Ok(CiReport {
        repeats,
        method: CI_METHOD,
        metrics,
        per_repeat,
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(n: usize, offset: usize) -> Samples {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![(i * 3 % n) as f64, ((i + offset) % 7) as f64]).collect();
        let targets = rows.iter().map(|r| f64::from(r[0] >= n as f64 / 2.0)).collect();
        let mut s = Samples::from_matrix(rows, targets);
        s.ids = (0..n).map(|i| format!("s{offset}-{i:03}")).collect();
        s
    }

    fn params() -> ForestParams {
        ForestParams {
            n_trees: 5,
            max_depth: 4,
            min_samples_split: 2,
            min_samples_leaf: 1,
            features_per_split: 1,
        }
    }

    #[test]
    fn reproducible_and_order_free() {
        let train = data(40, 0);
        let test = data(20, 1);
        let a = bootstrap_evaluate(&train, &test, Task::Classify, &params(), 4, 9).unwrap();
        let b = bootstrap_evaluate(&train, &test, Task::Classify, &params(), 4, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.repeats, 4);
        let rev: Vec<usize> = (0..train.len()).rev().collect();
        let c = bootstrap_evaluate(&train.subset(&rev), &test, Task::Classify, &params(), 4, 9).unwrap();
        assert_eq!(a.metrics, c.metrics);
        let rev_test: Vec<usize> = (0..test.len()).rev().collect();
        let d = bootstrap_evaluate(&train, &test.subset(&rev_test), Task::Classify, &params(), 4, 9).unwrap();
        assert_eq!(a.metrics, d.metrics);
    }

    #[test]
    fn interval_contains_mean() {
        let r = bootstrap_evaluate(&data(40, 0), &data(20, 1), Task::Classify, &params(), 3, 2).unwrap();
        for m in r.metrics.values() {
            assert!(m.ci_low <= m.mean && m.mean <= m.ci_high);
        }
        assert!(bootstrap_evaluate(&data(40, 0), &data(20, 1), Task::Classify, &params(), 1, 2).is_err());
    }

    #[test]
    fn constant_metric_has_point_interval() {
        let train = data(40, 0);
        let r = bootstrap_evaluate(&train, &train, Task::Classify, &ForestParams { features_per_split: 2, ..params() }, 3, 5).unwrap();
        let acc = r.metrics["roc_auc"];
        if acc.sd == 0.0 {
            assert_eq!(acc.ci_low, acc.mean);
            assert_eq!(acc.ci_high, acc.mean);
        }
    }
}
