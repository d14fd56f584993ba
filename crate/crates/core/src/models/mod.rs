//! CART trees, random forests for classification and regression, and
//! L2-regularized linear baselines.

mod file;
mod forest;
mod linear;
mod tree;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Dataset;
use crate::features::{fingerprint_of, FeatureTable};

pub use file::{load_model, save_model, FORMAT_VERSION};
pub use forest::{fit_forest, report_mmse, ForestModel, ForestParams, LABEL_THRESHOLD};
pub use linear::{fit_logistic, fit_ridge, LinearModel};
pub use tree::{best_split, node_impurity, LeafValue, Node, SplitCandidate, Tree};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("classification target has a single class ({0} rows); both classes are required")]
    SingleClass(usize),
    #[error("need at least 2 training rows, got {0}")]
    TooFewRows(usize),
    #[error("non-finite value in row {row} (id `{id}`), column `{column}`")]
    NonFinite { row: usize, id: String, column: String },
    #[error("invalid target in row {row} (id `{id}`): {message}")]
    InvalidTarget { row: usize, id: String, message: String },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("feature schema mismatch: model expects {expected}, input has {found}")]
    FingerprintMismatch { expected: String, found: String },
    #[error("model was trained for {model}, cannot {requested}")]
    TaskMismatch { model: Task, requested: &'static str },
    #[error("feature row has {found} values, model expects {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("feature row `{0}` has no matching transcript record")]
    UnknownId(String),
    #[error("normal equations are singular; increase l2 (currently {0})")]
    Singular(f64),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt model file at byte {offset}: {message}")]
    Corrupt { offset: usize, message: String },
    #[error("model format version {found} is newer than supported version {supported}")]
    UnsupportedVersion { found: String, supported: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classify,
    Regress,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Classify => "classify",
            Task::Regress => "regress",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classify" => Ok(Task::Classify),
            "regress" => Ok(Task::Regress),
            other => Err(format!("task must be `classify` or `regress`, got `{other}`")),
        }
    }
}

/// A design matrix with targets. Classification targets are 0.0 or 1.0;
/// regression targets are MMSE scores.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub names: Vec<String>,
    pub fingerprint: String,
}

impl Samples {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>, targets: Vec<f64>, names: Vec<String>) -> Self {
        assert_eq!(ids.len(), rows.len());
        assert_eq!(ids.len(), targets.len());
        let fingerprint = fingerprint_of(&names);
        Samples {
            ids,
            rows,
            targets,
            names,
            fingerprint,
        }
    }

    /// Anonymous features `f0, f1, ...` and ids `r000000, ...`.
    pub fn from_matrix(rows: Vec<Vec<f64>>, targets: Vec<f64>) -> Self {
        let width = rows.first().map_or(0, Vec::len);
        let names = (0..width).map(|j| format!("f{j}")).collect();
        let ids = (0..rows.len()).map(|i| format!("r{i:06}")).collect();
        Samples::new(ids, rows, targets, names)
    }

    /// Join feature rows with labels. Rows whose record lacks the target are
    /// skipped with a warning.
    pub fn from_table(table: &FeatureTable, dataset: &Dataset, task: Task) -> Result<Self, ModelError> {
        let by_id: HashMap<&str, _> = dataset.iter().map(|r| (r.id.as_str(), r)).collect();
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        let mut targets = Vec::new();
        let mut missing = 0usize;
        for (id, row) in table.ids().iter().zip(table.rows()) {
            let rec = by_id.get(id.as_str()).ok_or_else(|| ModelError::UnknownId(id.clone()))?;
            let target = match task {
                Task::Classify => rec.diagnosis.map(|d| if d { 1.0 } else { 0.0 }),
                Task::Regress => rec.mmse.map(f64::from),
            };
            match target {
                Some(t) => {
                    ids.push(id.clone());
                    rows.push(row.clone());
                    targets.push(t);
                }
                None => missing += 1,
            }
        }
        if missing > 0 {
            log::warn!("skipped {missing} rows without a {task} target");
        }
        Ok(Samples {
            ids,
            rows,
            targets,
            names: table.names().to_vec(),
            fingerprint: table.fingerprint().to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.targets.iter().map(|&t| t > 0.5).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Samples {
        Samples {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
            names: self.names.clone(),
            fingerprint: self.fingerprint.clone(),
        }
    }
}
