//! Path-dependent TreeSHAP attributions, an exhaustive Shapley oracle, and
//! global importance summaries.

use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::features::{FeatureTable, FeatureVector};
use crate::models::{ForestModel, ModelError, Node, Tree};

/// Largest distinct-feature count [`shap_oracle`] will enumerate.
pub const ORACLE_MAX_FEATURES: usize = 12;

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("tree uses {0} distinct features; the exhaustive oracle handles at most 12")]
    TooManyFeatures(usize),
    #[error("no rows to summarize")]
    Empty,
    #[error("feature statistics cover {expected} features, input has {found}")]
    StatsWidth { expected: usize, found: usize },
}

/// Additive explanation of one prediction: `base_value + sum(phi) = prediction`.
#[derive(Clone, Debug, PartialEq)]
pub struct Attribution {
    pub base_value: f64,
    pub phi: Vec<f64>,
    pub prediction: f64,
}

#[derive(Clone, Copy, Debug)]
struct PathElement {
    feature: Option<usize>,
    zero_fraction: f64,
    one_fraction: f64,
    weight: f64,
}

fn extend_path(path: &mut Vec<PathElement>, zero_fraction: f64, one_fraction: f64, feature: Option<usize>) {
    let d = path.len();
    path.push(PathElement {
        feature,
        zero_fraction,
        one_fraction,
        weight: if d == 0 { 1.0 } else { 0.0 },
    });
    let denom = (d + 1) as f64;
    for i in (0..d).rev() {
        path[i + 1].weight += one_fraction * path[i].weight * (i + 1) as f64 / denom;
        path[i].weight = zero_fraction * path[i].weight * (d - i) as f64 / denom;
    }
}

fn unwind_path(path: &mut Vec<PathElement>, index: usize) {
    let d = path.len() - 1;
    let PathElement {
        zero_fraction,
        one_fraction,
        ..
    } = path[index];
    let denom = (d + 1) as f64;
    let mut next = path[d].weight;
    for i in (0..d).rev() {
        if one_fraction != 0.0 {
            let tmp = path[i].weight;
            path[i].weight = next * denom / ((i + 1) as f64 * one_fraction);
            next = tmp - path[i].weight * zero_fraction * (d - i) as f64 / denom;
        } else {
            path[i].weight = path[i].weight * denom / (zero_fraction * (d - i) as f64);
        }
    }
    for i in index..d {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
    path.pop();
}

fn unwound_path_sum(path: &[PathElement], index: usize) -> f64 {
    let d = path.len() - 1;
    let PathElement {
        zero_fraction,
        one_fraction,
        ..
    } = path[index];
    let denom = (d + 1) as f64;
    let mut next = path[d].weight;
    let mut total = 0.0;
    for i in (0..d).rev() {
        if one_fraction != 0.0 {
            let tmp = next * denom / ((i + 1) as f64 * one_fraction);
            total += tmp;
            next = path[i].weight - tmp * zero_fraction * (d - i) as f64 / denom;
        } else {
            total += path[i].weight / zero_fraction / ((d - i) as f64 / denom);
        }
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    nodes: &[Node],
    x: &[f64],
    phi: &mut [f64],
    i: usize,
    mut path: Vec<PathElement>,
    zero_fraction: f64,
    one_fraction: f64,
    feature: Option<usize>,
) {
    extend_path(&mut path, zero_fraction, one_fraction, feature);
    match &nodes[i] {
        Node::Leaf { value, .. } => {
            let v = value.output();
            for j in 1..path.len() {
                let w = unwound_path_sum(&path, j);
                let e = path[j];
                if let Some(f) = e.feature {
                    phi[f] += w * (e.one_fraction - e.zero_fraction) * v;
                }
            }
        }
        Node::Split {
            feature: f,
            threshold,
            left,
            right,
            coverage,
        } => {
            let (hot, cold) = if x[*f] <= *threshold { (*left, *right) } else { (*right, *left) };
            let cover = *coverage as f64;
            let hot_zero = nodes[hot].coverage() as f64 / cover;
            let cold_zero = nodes[cold].coverage() as f64 / cover;
            let (mut incoming_zero, mut incoming_one) = (1.0, 1.0);
            if let Some(k) = path.iter().position(|e| e.feature == Some(*f)) {
                incoming_zero = path[k].zero_fraction;
                incoming_one = path[k].one_fraction;
                unwind_path(&mut path, k);
            }
            recurse(nodes, x, phi, hot, path.clone(), hot_zero * incoming_zero, incoming_one, Some(*f));
            recurse(nodes, x, phi, cold, path, cold_zero * incoming_zero, 0.0, Some(*f));
        }
    }
}

/// Coverage-weighted mean leaf output.
pub fn base_value(tree: &Tree) -> f64 {
    let nodes = tree.nodes();
    let root = nodes[0].coverage() as f64;
    nodes
        .iter()
        .filter_map(|n| match n {
            Node::Leaf { value, coverage } => Some(value.output() * *coverage as f64 / root),
            Node::Split { .. } => None,
        })
        .sum()
}

/// Per-tree TreeSHAP values for `x`, one per feature of `n_features`.
pub fn tree_shap_single(tree: &Tree, x: &[f64], n_features: usize) -> Vec<f64> {
    let mut phi = vec![0.0; n_features];
    let depth = tree.depth();
    recurse(tree.nodes(), x, &mut phi, 0, Vec::with_capacity(depth + 2), 1.0, 1.0, None);
    phi
}

/// Forest attribution for a raw row, without schema checks.
pub fn tree_shap_row(model: &ForestModel, x: &[f64]) -> Attribution {
    let p = model.n_features();
    let mut phi = vec![0.0; p];
    let mut base = 0.0;
    for t in model.trees() {
        for (acc, v) in phi.iter_mut().zip(tree_shap_single(t, x, p)) {
            *acc += v;
        }
        base += base_value(t);
    }
    let n = model.trees().len() as f64;
    phi.iter_mut().for_each(|v| *v /= n);
    Attribution {
        base_value: base / n,
        phi,
        prediction: model.predict_row(x),
    }
}

pub fn tree_shap(model: &ForestModel, x: &FeatureVector) -> Result<Attribution, ExplainError> {
    model.check_input(&x.fingerprint, x.values.len())?;
    Ok(tree_shap_row(model, &x.values))
}

/// Exact Shapley values by enumerating all subsets of the tree's features,
/// with `v(S)` the coverage-weighted expectation when the features in `S`
/// are fixed to `x`.
pub fn shap_oracle(tree: &Tree, x: &[f64], n_features: usize) -> Result<Vec<f64>, ExplainError> {
    let used = tree.features_used();
    let m = used.len();
    if m > ORACLE_MAX_FEATURES {
        return Err(ExplainError::TooManyFeatures(m));
    }
    fn value(nodes: &[Node], i: usize, x: &[f64], fixed: &[usize]) -> f64 {
        match &nodes[i] {
            Node::Leaf { value, .. } => value.output(),
            Node::Split {
                feature,
                threshold,
                left,
                right,
                coverage,
            } => {
                if fixed.contains(feature) {
                    let next = if x[*feature] <= *threshold { *left } else { *right };
                    value(nodes, next, x, fixed)
                } else {
                    let c = *coverage as f64;
                    let l = nodes[*left].coverage() as f64 / c;
                    let r = nodes[*right].coverage() as f64 / c;
                    l * value(nodes, *left, x, fixed) + r * value(nodes, *right, x, fixed)
                }
            }
        }
    }
    let v: Vec<f64> = (0..1usize << m)
        .map(|mask| {
            let fixed: Vec<usize> = (0..m).filter(|b| mask >> b & 1 == 1).map(|b| used[b]).collect();
            value(tree.nodes(), 0, x, &fixed)
        })
        .collect();
    let factorial = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let mut phi = vec![0.0; n_features];
    for (b, &f) in used.iter().enumerate() {
        let mut total = 0.0;
        for mask in 0..1usize << m {
            if mask >> b & 1 == 1 {
                continue;
            }
            let s = mask.count_ones() as usize;
            let w = factorial(s) * factorial(m - s - 1) / factorial(m);
            total += w * (v[mask | 1 << b] - v[mask]);
        }
        phi[f] = total;
    }
    Ok(phi)
}

/// Per-feature mean and sample standard deviation, for expressing feature
/// values in standard-deviation units.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStats {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl FeatureStats {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ExplainError> {
        let n = rows.len();
        if n == 0 {
            return Err(ExplainError::Empty);
        }
        let p = rows[0].len();
        let means: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
        let sds = (0..p)
            .map(|j| {
                if n < 2 {
                    return 0.0;
                }
                let ss: f64 = rows.iter().map(|r| (r[j] - means[j]).powi(2)).sum();
                (ss / (n - 1) as f64).sqrt()
            })
            .collect();
        Ok(FeatureStats { means, sds })
    }

    /// `(x - mean) / sd`, or 0 for constant features.
    pub fn normalize(&self, x: &[f64]) -> Result<Vec<f64>, ExplainError> {
        if x.len() != self.means.len() {
            return Err(ExplainError::StatsWidth {
                expected: self.means.len(),
                found: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect())
    }
}

/// One signed contribution in a per-prediction breakdown.
#[derive(Clone, Debug, PartialEq)]
pub struct Contribution {
    pub feature: String,
    pub value: f64,
    /// Value in training standard deviations.
    pub normalized: f64,
    pub phi: f64,
}

/// Contributions ranked by `|phi|` descending, ties by feature name.
pub fn risk_breakdown(
    attribution: &Attribution,
    names: &[String],
    x: &[f64],
    stats: &FeatureStats,
) -> Result<Vec<Contribution>, ExplainError> {
    let z = stats.normalize(x)?;
    let mut out: Vec<Contribution> = names
        .iter()
        .enumerate()
        .map(|(j, n)| Contribution {
            feature: n.clone(),
            value: x[j],
            normalized: z[j],
            phi: attribution.phi[j],
        })
        .collect();
    out.sort_by(|a, b| b.phi.abs().total_cmp(&a.phi.abs()).then_with(|| a.feature.cmp(&b.feature)));
    Ok(out)
}

/// Dataset-level attributions and mean absolute SHAP per feature.
#[derive(Clone, Debug, PartialEq)]
pub struct ImportanceSummary {
    pub features: Vec<String>,
    /// Mean `|phi|` in schema order.
    pub mean_abs: Vec<f64>,
    /// Feature indices, most important first; ties by feature name.
    pub ranking: Vec<usize>,
    pub ids: Vec<String>,
    pub attributions: Vec<Attribution>,
}

/// Attributions for all rows; the mean is accumulated in record-id order.
pub fn summarize_importance(model: &ForestModel, table: &FeatureTable) -> Result<ImportanceSummary, ExplainError> {
    model.check_input(table.fingerprint(), table.names().len())?;
    if table.is_empty() {
        return Err(ExplainError::Empty);
    }
    let attributions: Vec<Attribution> = table.rows().par_iter().map(|r| tree_shap_row(model, r)).collect();
    let mut order: Vec<usize> = (0..table.len()).collect();
    order.sort_by(|&a, &b| table.ids()[a].cmp(&table.ids()[b]).then(a.cmp(&b)));
    let p = table.names().len();
    let mut mean_abs = vec![0.0; p];
    for &i in &order {
        for (acc, v) in mean_abs.iter_mut().zip(&attributions[i].phi) {
            *acc += v.abs();
        }
    }
    let n = table.len() as f64;
    mean_abs.iter_mut().for_each(|v| *v /= n);
    let names = table.names().to_vec();
    let mut ranking: Vec<usize> = (0..p).collect();
    ranking.sort_by(|&a, &b| mean_abs[b].total_cmp(&mean_abs[a]).then_with(|| names[a].cmp(&names[b])));
    Ok(ImportanceSummary {
        features: names,
        mean_abs,
        ranking,
        ids: table.ids().to_vec(),
        attributions,
    })
}

impl ImportanceSummary {
    /// `(feature, mean |phi|)` for the `k` highest-ranked features.
    pub fn top_k(&self, k: usize) -> Vec<(String, f64)> {
        self.ranking
            .iter()
            .take(k)
            .map(|&j| (self.features[j].clone(), self.mean_abs[j]))
            .collect()
    }

    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.ranking.iter().position(|&j| self.features[j] == feature).map(|r| r + 1)
    }

    /// `feature,mean_abs_shap,rank` in rank order.
    pub fn write_importance_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["feature", "mean_abs_shap", "rank"])?;
        for (r, &j) in self.ranking.iter().enumerate() {
            w.write_record([self.features[j].clone(), self.mean_abs[j].to_string(), (r + 1).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `id,prediction,base_value,<phi per feature>` in table order.
    pub fn write_explanations_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["id".to_string(), "prediction".into(), "base_value".into()];
        header.extend(self.features.iter().cloned());
        w.write_record(&header)?;
        for (id, a) in self.ids.iter().zip(&self.attributions) {
            let mut rec = vec![id.clone(), a.prediction.to_string(), a.base_value.to_string()];
            rec.extend(a.phi.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
