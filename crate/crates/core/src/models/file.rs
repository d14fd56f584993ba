use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::forest::{ForestModel, ForestParams};
use super::tree::{LeafValue, Node, Tree};
use super::{ModelError, Task};
use crate::features::fingerprint_of;
use crate::TOOL_VERSION;

/// Version written by this build; older or equal versions load.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: Value,
    tool_version: String,
    task: Task,
    params: ForestParams,
    seed: u64,
    schema_fingerprint: String,
    n_features: usize,
    feature_names: Vec<String>,
    metadata: BTreeMap<String, Value>,
    trees: Vec<Vec<Node>>,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: Option<Value>,
}

fn byte_offset(text: &str, err: &serde_json::Error) -> usize {
    if err.line() == 0 {
        return 0;
    }
    let start: usize = text.split_inclusive('\n').take(err.line() - 1).map(str::len).sum();
    (start + err.column().saturating_sub(1)).min(text.len())
}

fn corrupt(text: &str, err: serde_json::Error) -> ModelError {
    ModelError::Corrupt {
        offset: byte_offset(text, &err),
        message: err.to_string(),
    }
}

fn invalid(message: impl Into<String>) -> ModelError {
    ModelError::Corrupt {
        offset: 0,
        message: message.into(),
    }
}

fn parse_version(v: &Value) -> Result<u64, ModelError> {
    let parsed = match v {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.trim().parse::<u64>().ok(),
        _ => None,
    };
    parsed.ok_or_else(|| invalid(format!("format_version `{v}` is not a non-negative integer")))
}

impl ForestModel {
    /// Compact JSON with shortest round-trip number formatting.
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format_version: Value::from(FORMAT_VERSION),
            tool_version: TOOL_VERSION.to_string(),
            task: self.task,
            params: self.params.clone(),
            seed: self.seed,
            schema_fingerprint: self.fingerprint.clone(),
            n_features: self.feature_names.len(),
            feature_names: self.feature_names.clone(),
            metadata: self.metadata.clone(),
            trees: self.trees.iter().map(|t| t.nodes().to_vec()).collect(),
        };
        let mut s = serde_json::to_string(&file).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<ForestModel, ModelError> {
        let probe: VersionProbe = serde_json::from_str(text).map_err(|e| corrupt(text, e))?;
        let version = parse_version(&probe.format_version.ok_or_else(|| invalid("missing format_version"))?)?;
        if version > u64::from(FORMAT_VERSION) {
            return Err(ModelError::UnsupportedVersion {
                found: version.to_string(),
                supported: FORMAT_VERSION,
            });
        }
        if version == 0 {
            return Err(invalid("format_version 0 is not a valid version"));
        }
        let file: ModelFile = serde_json::from_str(text).map_err(|e| corrupt(text, e))?;
        if file.feature_names.len() != file.n_features {
            return Err(invalid(format!(
                "n_features is {} but {} feature names are listed",
                file.n_features,
                file.feature_names.len()
            )));
        }
        let fingerprint = fingerprint_of(&file.feature_names);
        if fingerprint != file.schema_fingerprint {
            return Err(invalid("schema_fingerprint does not match feature_names"));
        }
        let mut trees = Vec::with_capacity(file.trees.len());
        for (t, nodes) in file.trees.into_iter().enumerate() {
            for n in &nodes {
                match (n, file.task) {
                    (Node::Split { feature, .. }, _) if *feature >= file.n_features => {
                        return Err(invalid(format!("tree {t} splits on feature {feature} >= {}", file.n_features)));
                    }
                    (Node::Leaf { value: LeafValue::Distribution(d), .. }, Task::Classify) => {
                        if (d[0] + d[1] - 1.0).abs() > 1e-12 || d.iter().any(|p| !(0.0..=1.0).contains(p)) {
                            return Err(invalid(format!("tree {t} has a leaf distribution that is not a probability vector")));
                        }
                    }
                    (Node::Leaf { value: LeafValue::Mean(m), .. }, Task::Regress) if !m.is_finite() => {
                        return Err(invalid(format!("tree {t} has a non-finite leaf mean")));
                    }
                    (Node::Leaf { value: LeafValue::Mean(_), .. }, Task::Classify)
                    | (Node::Leaf { value: LeafValue::Distribution(_), .. }, Task::Regress) => {
                        return Err(invalid(format!("tree {t} has a leaf of the wrong kind for a {} model", file.task)));
                    }
                    _ => {}
                }
            }
            trees.push(Tree::from_nodes(nodes).map_err(|m| invalid(format!("tree {t}: {m}")))?);
        }
        let mut model = ForestModel::from_trees(file.task, file.params, file.seed, file.feature_names, trees)?;
        model.metadata = file.metadata;
        Ok(model)
    }
}

pub fn save_model(model: &ForestModel, path: &Path) -> Result<(), ModelError> {
    std::fs::write(path, model.to_json()).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<ForestModel, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ForestModel::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit_forest, Samples};
    use crate::rng;
    use rand::RngExt;

    fn model(task: Task) -> ForestModel {
        let mut rng = rng::stream(2);
        let rows: Vec<Vec<f64>> = (0..80).map(|_| (0..4).map(|_| rng.random::<f64>() * 10.0 - 3.0).collect()).collect();
        let targets = rows
            .iter()
            .map(|r| match task {
                Task::Classify => f64::from(r[0] > r[3]),
                Task::Regress => r[1] * 2.7 + r[2] / 3.0,
            })
            .collect();
        let s = Samples::from_matrix(rows, targets);
        let p = ForestParams {
            n_trees: 6,
            max_depth: 6,
            min_samples_split: 2,
            min_samples_leaf: 1,
            features_per_split: 2,
        };
        let mut m = fit_forest(&s, task, &p, 4).unwrap();
        m.metadata.insert("config_hash".into(), Value::from("abc"));
        m
    }

    #[test]
    fn round_trip_bit_exact() {
        for task in [Task::Classify, Task::Regress] {
            let m = model(task);
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.json");
            save_model(&m, &path).unwrap();
            let back = load_model(&path).unwrap();
            assert_eq!(back, m);
            let mut rng = rng::stream(77);
            for _ in 0..1000 {
                let x: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * 12.0 - 4.0).collect();
                assert_eq!(m.predict_row(&x).to_bits(), back.predict_row(&x).to_bits());
            }
        }
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let text = model(Task::Classify).to_json();
        let cut = &text[..text.len() / 2];
        match ForestModel::from_json(cut) {
            Err(ModelError::Corrupt { offset, .. }) => assert!(offset > 0 && offset <= cut.len()),
            other => panic!("expected corrupt error, got {other:?}"),
        }
    }

    #[test]
    fn byte_offset_on_later_line() {
        let text = "{\n  \"format_version\": 1,\n  oops\n}";
        match ForestModel::from_json(text) {
            Err(ModelError::Corrupt { offset, .. }) => assert_eq!(&text[offset..offset + 1], "o"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn newer_version_rejected() {
        let text = model(Task::Regress).to_json().replacen("\"format_version\":1", "\"format_version\":\"99\"", 1);
        let err = ForestModel::from_json(&text).unwrap_err();
        assert_eq!(err.to_string(), "model format version 99 is newer than supported version 1");
        let text = model(Task::Regress).to_json().replacen("\"format_version\":1", "\"format_version\":2", 1);
        assert!(matches!(ForestModel::from_json(&text), Err(ModelError::UnsupportedVersion { .. })));
    }

    #[test]
    fn tampered_structure_rejected() {
        let text = model(Task::Classify).to_json().replacen("\"feature\":", "\"feature\":9", 1);
        assert!(matches!(ForestModel::from_json(&text), Err(ModelError::Corrupt { .. })));
    }
}
