use std::collections::BTreeMap;

use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, GrowParams, Tree};
use super::{ModelError, Samples, Task};
use crate::corpus::MMSE_MAX;
use crate::features::{FeatureTable, FeatureVector};
use crate::rng;

/// Scores strictly above this are labelled positive.
pub const LABEL_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Maximum number of split levels; trees stop earlier when nodes are pure.
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub features_per_split: usize,
}

impl ForestParams {
    /// 50 trees of depth at most 16; `floor(sqrt(p))` candidate features per
    /// split for classification and `p / 3` for regression.
    pub fn defaults(task: Task, n_features: usize) -> Self {
        let features_per_split = match task {
            Task::Classify => (n_features as f64).sqrt().floor() as usize,
            Task::Regress => n_features / 3,
        }
        .max(1);
        ForestParams {
            n_trees: 50,
            max_depth: 16,
            min_samples_split: 2,
            min_samples_leaf: 1,
            features_per_split,
        }
    }

    pub fn validate(&self, n_features: usize) -> Result<(), ModelError> {
        let fields = [
            ("n_trees", self.n_trees),
            ("max_depth", self.max_depth),
            ("min_samples_split", self.min_samples_split),
            ("min_samples_leaf", self.min_samples_leaf),
            ("features_per_split", self.features_per_split),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::InvalidParams(format!("{name} must be positive")));
        }
        if self.min_samples_leaf > self.min_samples_split {
            return Err(ModelError::InvalidParams(format!(
                "min_samples_leaf ({}) exceeds min_samples_split ({})",
                self.min_samples_leaf, self.min_samples_split
            )));
        }
        if self.features_per_split > n_features {
            return Err(ModelError::InvalidParams(format!(
                "features_per_split ({}) exceeds the feature count ({n_features})",
                self.features_per_split
            )));
        }
        Ok(())
    }
}

/// A fitted random forest.
#[derive(Clone, Debug, PartialEq)]
pub struct ForestModel {
    pub(crate) task: Task,
    pub(crate) params: ForestParams,
    pub(crate) seed: u64,
    pub(crate) fingerprint: String,
    pub(crate) feature_names: Vec<String>,
    pub(crate) trees: Vec<Tree>,
    /// Free-form provenance recorded in the model file.
    pub metadata: BTreeMap<String, serde_json::Value>,
}

fn validate_samples(samples: &Samples, task: Task) -> Result<(), ModelError> {
    if samples.len() < 2 {
        return Err(ModelError::TooFewRows(samples.len()));
    }
    let width = samples.n_features();
    for (i, (row, id)) in samples.rows.iter().zip(&samples.ids).enumerate() {
        if row.len() != width {
            return Err(ModelError::WidthMismatch {
                expected: width,
                found: row.len(),
            });
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite {
                row: i,
                id: id.clone(),
                column: samples.names[j].clone(),
            });
        }
        let t = samples.targets[i];
        let bad = match task {
            Task::Classify => (t != 0.0 && t != 1.0).then(|| format!("label {t} is not 0 or 1")),
            Task::Regress => (!t.is_finite()).then(|| format!("target {t} is not finite")),
        };
        if let Some(message) = bad {
            return Err(ModelError::InvalidTarget {
                row: i,
                id: id.clone(),
                message,
            });
        }
    }
    if task == Task::Classify {
        let pos = samples.targets.iter().filter(|&&t| t == 1.0).count();
        if pos == 0 || pos == samples.len() {
            return Err(ModelError::SingleClass(samples.len()));
        }
    }
    Ok(())
}

/// Fit a forest. Rows are put in a canonical order (stable sort by id)
/// before any sampling, so the result does not depend on input row order.
/// Tree `t` draws its bootstrap rows and per-node candidate features from
/// the stream `mix(seed, t)`.
pub fn fit_forest(samples: &Samples, task: Task, params: &ForestParams, seed: u64) -> Result<ForestModel, ModelError> {
    validate_samples(samples, task)?;
    params.validate(samples.n_features())?;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples.ids[a].cmp(&samples.ids[b]));
    let x: Vec<Vec<f64>> = order.iter().map(|&i| samples.rows[i].clone()).collect();
    let y: Vec<f64> = order.iter().map(|&i| samples.targets[i]).collect();
    let grow_params = GrowParams {
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
        min_samples_leaf: params.min_samples_leaf,
        features_per_split: params.features_per_split,
        n_features: samples.n_features(),
    };
    let n = x.len();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(rng::mix(seed, t as u64));
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            grow(&x, &y, rows, task, &grow_params, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        task,
        params: params.clone(),
        seed,
        fingerprint: samples.fingerprint.clone(),
        feature_names: samples.names.clone(),
        trees,
        metadata: BTreeMap::new(),
    })
}

/// Clamp a raw MMSE prediction to the valid score range for reporting.
pub fn report_mmse(raw: f64) -> f64 {
    raw.clamp(0.0, MMSE_MAX as f64)
}

impl ForestModel {
    /// Assemble a model from explicit trees.
    pub fn from_trees(
        task: Task,
        params: ForestParams,
        seed: u64,
        feature_names: Vec<String>,
        trees: Vec<Tree>,
    ) -> Result<Self, ModelError> {
        if trees.is_empty() {
            return Err(ModelError::InvalidParams("a forest needs at least one tree".into()));
        }
        for t in &trees {
            if let Some(&f) = t.features_used().last() {
                if f >= feature_names.len() {
                    return Err(ModelError::InvalidParams(format!(
                        "tree splits on feature {f} but only {} features exist",
                        feature_names.len()
                    )));
                }
            }
        }
        Ok(ForestModel {
            task,
            params,
            seed,
            fingerprint: crate::features::fingerprint_of(&feature_names),
            feature_names,
            trees,
            metadata: BTreeMap::new(),
        })
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Mean of per-tree outputs, without schema checks.
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n_features(), "row width");
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        sum / self.trees.len() as f64
    }

    pub fn check_input(&self, fingerprint: &str, width: usize) -> Result<(), ModelError> {
        if fingerprint != self.fingerprint {
            return Err(ModelError::FingerprintMismatch {
                expected: self.fingerprint.clone(),
                found: fingerprint.to_string(),
            });
        }
        if width != self.n_features() {
            return Err(ModelError::WidthMismatch {
                expected: self.n_features(),
                found: width,
            });
        }
        Ok(())
    }

    fn require(&self, task: Task, requested: &'static str) -> Result<(), ModelError> {
        if self.task == task {
            Ok(())
        } else {
            Err(ModelError::TaskMismatch {
                model: self.task,
                requested,
            })
        }
    }

    /// Probability of the positive class.
    pub fn predict_proba(&self, x: &FeatureVector) -> Result<f64, ModelError> {
        self.require(Task::Classify, "predict class probabilities")?;
        self.check_input(&x.fingerprint, x.values.len())?;
        Ok(self.predict_row(&x.values))
    }

    /// Raw regression output; see [`report_mmse`] for the reported value.
    pub fn predict(&self, x: &FeatureVector) -> Result<f64, ModelError> {
        self.require(Task::Regress, "predict a regression target")?;
        self.check_input(&x.fingerprint, x.values.len())?;
        Ok(self.predict_row(&x.values))
    }

    /// Raw outputs for every table row, in table order.
    pub fn predict_table(&self, table: &FeatureTable) -> Result<Vec<f64>, ModelError> {
        self.check_input(table.fingerprint(), table.names().len())?;
        Ok(table.rows().par_iter().map(|r| self.predict_row(r)).collect())
    }

    pub fn predict_samples(&self, samples: &Samples) -> Result<Vec<f64>, ModelError> {
        self.check_input(&samples.fingerprint, samples.n_features())?;
        Ok(samples.rows.par_iter().map(|r| self.predict_row(r)).collect())
    }
}
