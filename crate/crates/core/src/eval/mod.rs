//! Metrics, cross-validation, random hyperparameter search, bootstrap
//! confidence intervals, calibration and subgroup analysis.

mod bootstrap;
mod calibration;
mod cv;
mod groups;
mod metrics;
mod report;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::CorpusError;
use crate::models::ModelError;

pub use bootstrap::{bootstrap_evaluate, CiReport, MetricCi, CI_METHOD, Z_95};
pub use calibration::{calibration_curve, CalibrationBin, CalibrationCurve};
pub use cv::{cross_validate, random_search, CvReport, FoldResult, ParamSpace, SearchReport, Trial};
pub use groups::{age_band, group_metrics, GroupReport, GroupResult, Grouping};
pub use metrics::{
    classification_metrics, midranks, regression_metrics, roc_auc, roc_points, spearman, ClassificationMetrics,
    Confusion, RegressionMetrics,
};
pub use report::EvalReport;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("both classes are required (got {positives} positive, {negatives} negative)")]
    SingleClass { positives: usize, negatives: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} values, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("correlation is undefined for a constant vector")]
    Constant,
    #[error("{0}")]
    InvalidArgument(String),
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<EvalError>,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Mean and sample standard deviation (`n - 1` denominator; 0 for one value).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> MeanSd {
        let n = values.len();
        if n == 0 {
            return MeanSd { mean: f64::NAN, sd: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        MeanSd { mean, sd }
    }
}

/// Metric values for either task, in report order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Metrics {
    Classification(ClassificationMetrics),
    Regression(RegressionMetrics),
}

impl Metrics {
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        match self {
            Metrics::Classification(m) => m.named(),
            Metrics::Regression(m) => m.named(),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.named().into_iter().find(|(n, _)| *n == name).map(|(_, v)| v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sample_sd() {
        let m = MeanSd::of(&[0.8, 0.9]);
        assert_abs_diff_eq!(m.mean, 0.85, epsilon = 1e-12);
        assert_abs_diff_eq!(m.sd, 0.1 / 2f64.sqrt(), epsilon = 1e-12);
        assert_eq!(MeanSd::of(&[0.3]).sd, 0.0);
    }
}
