use std::collections::BTreeMap;

use serde::Serialize;

use super::{CalibrationBin, CalibrationCurve, CiReport, CvReport, FoldResult, GroupReport, MeanSd};
use crate::models::{ForestParams, Task};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BootstrapSection {
    pub repeats: usize,
    pub ci_method: &'static str,
    pub mean: BTreeMap<String, f64>,
    pub ci_low: BTreeMap<String, f64>,
    pub ci_high: BTreeMap<String, f64>,
    pub sd: BTreeMap<String, f64>,
}

impl From<&CiReport> for BootstrapSection {
    fn from(ci: &CiReport) -> Self {
        let pick = |f: fn(&super::MetricCi) -> f64| ci.metrics.iter().map(|(k, v)| (k.clone(), f(v))).collect();
        BootstrapSection {
            repeats: ci.repeats,
            ci_method: ci.method,
            mean: pick(|m| m.mean),
            ci_low: pick(|m| m.ci_low),
            ci_high: pick(|m| m.ci_high),
            sd: pick(|m| m.sd),
        }
    }
}

/// The evaluation document. Keys serialize in declaration order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub tool_version: String,
    pub seed: u64,
    pub config_hash: String,
    pub task: Task,
    pub params: ForestParams,
    pub folds: Vec<FoldResult>,
    pub cv_summary: BTreeMap<String, MeanSd>,
    pub bootstrap: BootstrapSection,
    pub calibration: Vec<CalibrationBin>,
    pub reliability_gap: Option<f64>,
    pub groups: BTreeMap<String, GroupReport>,
    /// Spearman correlation between scores and MMSE, when MMSE is known.
    pub score_mmse_spearman: Option<f64>,
}

impl EvalReport {
    pub fn new(task: Task, params: ForestParams, cv: Option<&CvReport>, ci: &CiReport) -> Self {
        EvalReport {
            tool_version: crate::TOOL_VERSION.to_string(),
            seed: 0,
            config_hash: String::new(),
            task,
            params,
            folds: cv.map(|c| c.folds.clone()).unwrap_or_default(),
            cv_summary: cv.map(|c| c.summary.clone()).unwrap_or_default(),
            bootstrap: ci.into(),
            calibration: Vec::new(),
            reliability_gap: None,
            groups: BTreeMap::new(),
            score_mmse_spearman: None,
        }
    }

    pub fn with_calibration(mut self, curve: &CalibrationCurve) -> Self {
        self.calibration = curve.bins.clone();
        self.reliability_gap = Some(curve.reliability_gap);
        self
    }

    pub fn with_groups(mut self, groups: Vec<GroupReport>) -> Self {
        self.groups = groups.into_iter().map(|g| (g.grouping.as_str().to_string(), g)).collect();
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
