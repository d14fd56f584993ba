use std::collections::BTreeMap;

use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{classification_metrics, regression_metrics};
use super::{EvalError, MeanSd, Metrics};
use crate::corpus::kfold_assign;
use crate::models::{fit_forest, ForestParams, Samples, Task, LABEL_THRESHOLD};
use crate::rng;

/// Stream index reserved for drawing search points.
const SEARCH_STREAM: u64 = 0x5EA2_C4ED;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub metrics: Metrics,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CvReport {
    pub k: usize,
    pub task: Task,
    pub folds: Vec<FoldResult>,
    pub summary: BTreeMap<String, MeanSd>,
    /// Held-out prediction for every sample, in sample order.
    #[serde(skip)]
    pub out_of_fold: Vec<f64>,
    #[serde(skip)]
    pub fold_of: Vec<usize>,
}

impl CvReport {
    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.summary.get(metric).map(|m| m.mean)
    }
}

/// Evaluate `samples` on `k` held-out folds. Classification folds are
/// stratified by label; regression folds use one stratum. Fold `f` is fitted
/// with seed `mix(seed, f)`.
pub fn cross_validate(
    samples: &Samples,
    task: Task,
    params: &ForestParams,
    k: usize,
    seed: u64,
) -> Result<CvReport, EvalError> {
    let ids: Vec<&str> = samples.ids.iter().map(String::as_str).collect();
    let strata: Vec<usize> = match task {
        Task::Classify => samples.labels().into_iter().map(usize::from).collect(),
        Task::Regress => vec![0; samples.len()],
    };
    let fold_of = kfold_assign(&ids, &strata, k, seed)?;
    let results: Vec<(FoldResult, Vec<usize>, Vec<f64>)> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let test_idx: Vec<usize> = (0..samples.len()).filter(|&i| fold_of[i] == fold).collect();
            let train_idx: Vec<usize> = (0..samples.len()).filter(|&i| fold_of[i] != fold).collect();
            let wrap = |e: EvalError| EvalError::Fold { fold, source: Box::new(e) };
            let train = samples.subset(&train_idx);
            let test = samples.subset(&test_idx);
            let model = fit_forest(&train, task, params, rng::mix(seed, fold as u64)).map_err(|e| wrap(e.into()))?;
            let predictions = model.predict_samples(&test).map_err(|e| wrap(e.into()))?;
            let metrics = match task {
                Task::Classify => Metrics::Classification(
                    classification_metrics(&predictions, &test.labels(), LABEL_THRESHOLD).map_err(wrap)?,
                ),
                Task::Regress => Metrics::Regression(regression_metrics(&test.targets, &predictions).map_err(wrap)?),
            };
            let result = FoldResult {
                fold,
                n_train: train.len(),
                n_test: test.len(),
                metrics,
            };
            Ok((result, test_idx, predictions))
        })
        .collect::<Result<_, EvalError>>()?;
    let mut out_of_fold = vec![f64::NAN; samples.len()];
    let mut folds = Vec::with_capacity(k);
    for (result, idx, preds) in results {
        for (i, p) in idx.into_iter().zip(preds) {
            out_of_fold[i] = p;
        }
        folds.push(result);
    }
    let summary = summarize(folds.iter().map(|f| &f.metrics));
    Ok(CvReport {
        k,
        task,
        folds,
        summary,
        out_of_fold,
        fold_of,
    })
}

pub(crate) fn summarize<'a>(metrics: impl Iterator<Item = &'a Metrics>) -> BTreeMap<String, MeanSd> {
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for m in metrics {
        for (name, v) in m.named() {
            columns.entry(name.to_string()).or_default().push(v);
        }
    }
    columns.into_iter().map(|(k, v)| (k, MeanSd::of(&v))).collect()
}

/// Inclusive integer ranges for each forest parameter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub n_trees: (usize, usize),
    pub max_depth: (usize, usize),
    pub min_samples_split: (usize, usize),
    pub min_samples_leaf: (usize, usize),
    pub features_per_split: (usize, usize),
}

impl ParamSpace {
    /// Classification: 50-500 trees, depth 3-20. Regression: 50-200 trees,
    /// depth 5-10, split 2-5, leaf 1-2. Candidate features stay at the
    /// task default.
    pub fn defaults(task: Task, n_features: usize) -> Self {
        let base = ForestParams::defaults(task, n_features);
        let fps = (base.features_per_split, base.features_per_split);
        match task {
            Task::Classify => ParamSpace {
                n_trees: (50, 500),
                max_depth: (3, 20),
                min_samples_split: (2, 2),
                min_samples_leaf: (1, 1),
                features_per_split: fps,
            },
            Task::Regress => ParamSpace {
                n_trees: (50, 200),
                max_depth: (5, 10),
                min_samples_split: (2, 5),
                min_samples_leaf: (1, 2),
                features_per_split: fps,
            },
        }
    }

    pub fn single(p: &ForestParams) -> Self {
        ParamSpace {
            n_trees: (p.n_trees, p.n_trees),
            max_depth: (p.max_depth, p.max_depth),
            min_samples_split: (p.min_samples_split, p.min_samples_split),
            min_samples_leaf: (p.min_samples_leaf, p.min_samples_leaf),
            features_per_split: (p.features_per_split, p.features_per_split),
        }
    }

    fn ranges(&self) -> [(&'static str, (usize, usize)); 5] {
        [
            ("n_trees", self.n_trees),
            ("max_depth", self.max_depth),
            ("min_samples_split", self.min_samples_split),
            ("min_samples_leaf", self.min_samples_leaf),
            ("features_per_split", self.features_per_split),
        ]
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        for (name, (lo, hi)) in self.ranges() {
            if lo == 0 || lo > hi {
                return Err(EvalError::InvalidArgument(format!("empty or invalid range for {name}: [{lo}, {hi}]")));
            }
        }
        if self.min_samples_leaf.1 > self.min_samples_split.0 {
            return Err(EvalError::InvalidArgument(
                "min_samples_leaf range must not exceed the smallest min_samples_split".into(),
            ));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut rng::SplitMix64) -> ForestParams {
        let mut pick = |(lo, hi): (usize, usize)| rng.random_range(lo..=hi);
        ForestParams {
            n_trees: pick(self.n_trees),
            max_depth: pick(self.max_depth),
            min_samples_split: pick(self.min_samples_split),
            min_samples_leaf: pick(self.min_samples_leaf),
            features_per_split: pick(self.features_per_split),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trial {
    pub index: usize,
    pub params: ForestParams,
    pub score: f64,
    #[serde(skip)]
    pub cv: CvReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchReport {
    /// `roc_auc` (maximized) or `mae` (minimized).
    pub metric: &'static str,
    pub best_index: usize,
    pub best: ForestParams,
    pub best_score: f64,
    pub trials: Vec<Trial>,
}

impl SearchReport {
    pub fn best_cv(&self) -> &CvReport {
        &self.trials[self.best_index].cv
    }
}

/// Draw `budget` points uniformly from `space` and score each by mean CV
/// ROC-AUC (classification) or MAE (regression) on the same folds. The
/// earliest draw wins ties.
pub fn random_search(
    samples: &Samples,
    task: Task,
    space: &ParamSpace,
    budget: usize,
    k: usize,
    seed: u64,
) -> Result<SearchReport, EvalError> {
    if budget == 0 {
        return Err(EvalError::InvalidArgument("search budget must be at least 1".into()));
    }
    space.validate()?;
    let mut rng = rng::stream(rng::mix(seed, SEARCH_STREAM));
    let points: Vec<ForestParams> = (0..budget).map(|_| space.draw(&mut rng)).collect();
    let (metric, maximize) = match task {
        Task::Classify => ("roc_auc", true),
        Task::Regress => ("mae", false),
    };
    let mut trials: Vec<Trial> = Vec::with_capacity(budget);
    let mut best_index = 0;
    for (index, params) in points.into_iter().enumerate() {
        let cv = cross_validate(samples, task, &params, k, seed)?;
        let score = cv.mean(metric).unwrap_or(f64::NAN);
        if index > 0 {
            let incumbent = trials[best_index].score;
            let better = if maximize { score > incumbent } else { score < incumbent };
            if better {
                best_index = index;
            }
        }
        log::info!("search trial {index}: {params:?} -> {metric} {score:.4}");
        trials.push(Trial { index, params, score, cv });
    }
    Ok(SearchReport {
        metric,
        best_index,
        best: trials[best_index].params.clone(),
        best_score: trials[best_index].score,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable(n: usize) -> Samples {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64, ((i * 37) % 11) as f64]).collect();
        let targets = (0..n).map(|i| f64::from(i >= n / 2)).collect();
        Samples::from_matrix(rows, targets)
    }

    fn small() -> ForestParams {
        ForestParams {
            n_trees: 5,
            max_depth: 4,
            min_samples_split: 2,
            min_samples_leaf: 1,
            features_per_split: 1,
        }
    }

    #[test]
    fn separable_cv_is_perfect() {
        let cv = cross_validate(&separable(40), Task::Classify, &ForestParams { features_per_split: 2, ..small() }, 4, 1).unwrap();
        assert_eq!(cv.folds.len(), 4);
        assert_eq!(cv.mean("accuracy"), Some(1.0));
        assert!(cv.out_of_fold.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn too_many_folds_rejected() {
        let s = separable(10);
        assert!(cross_validate(&s, Task::Classify, &small(), 10, 0).is_err());
    }

    #[test]
    fn regression_cv() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64]).collect();
        let targets = (0..30).map(|i| (i / 2) as f64).collect();
        let cv = cross_validate(&Samples::from_matrix(rows, targets), Task::Regress, &small(), 3, 2).unwrap();
        assert!(cv.mean("mae").unwrap() < 3.0);
        assert!(cv.summary["rmse"].mean >= cv.summary["mae"].mean);
    }

    #[test]
    fn search_budget_and_collapsed_space() {
        let s = separable(24);
        assert!(random_search(&s, Task::Classify, &ParamSpace::single(&small()), 0, 3, 0).is_err());
        let r = random_search(&s, Task::Classify, &ParamSpace::single(&small()), 3, 3, 0).unwrap();
        assert_eq!(r.best, small());
        assert_eq!(r.best_index, 0);
        let space = ParamSpace { n_trees: (2, 6), max_depth: (1, 3), ..ParamSpace::single(&small()) };
        let r = random_search(&s, Task::Classify, &space, 1, 3, 0).unwrap();
        assert_eq!(r.trials.len(), 1);
        assert_eq!(r.best, r.trials[0].params);
        let bad = ParamSpace { max_depth: (5, 4), ..space };
        assert!(random_search(&s, Task::Classify, &bad, 1, 3, 0).is_err());
    }
}
