use serde::Serialize;

use super::EvalError;

fn check_scores(scores: &[f64], labels: &[bool]) -> Result<(usize, usize), EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch(scores.len(), labels.len()));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(EvalError::InvalidArgument(format!("score {i} is NaN")));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::SingleClass { positives, negatives });
    }
    Ok((positives, negatives))
}

/// 1-based ranks with ties sharing their mean rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Mann-Whitney area under the ROC curve; tied pairs count one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    let (p, n) = check_scores(scores, labels)?;
    let ranks = midranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    let pf = p as f64;
    Ok((rank_sum - pf * (pf + 1.0) / 2.0) / (pf * n as f64))
}

/// `(false positive rate, true positive rate, threshold)` from the highest
/// threshold down; tied scores form one step.
pub fn roc_points(scores: &[f64], labels: &[bool]) -> Result<Vec<(f64, f64, f64)>, EvalError> {
    let (p, n) = check_scores(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0, f64::INFINITY)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n as f64, tp as f64 / p as f64, s));
    }
    Ok(points)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    /// Positive prediction iff `score > threshold`.
    pub fn at_threshold(scores: &[f64], labels: &[bool], threshold: f64) -> Confusion {
        let mut c = Confusion::default();
        for (&s, &l) in scores.iter().zip(labels) {
            match (s > threshold, l) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn sensitivity(&self) -> f64 {
        self.tp as f64 / (self.tp + self.fn_) as f64
    }

    pub fn specificity(&self) -> f64 {
        self.tn as f64 / (self.fp + self.tn) as f64
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassificationMetrics {
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub roc_auc: f64,
    pub confusion: Confusion,
}

impl ClassificationMetrics {
    /// Named values in report order.
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("roc_auc", self.roc_auc),
            ("accuracy", self.accuracy),
            ("sensitivity", self.sensitivity),
            ("specificity", self.specificity),
        ]
    }
}

pub fn classification_metrics(scores: &[f64], labels: &[bool], threshold: f64) -> Result<ClassificationMetrics, EvalError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(EvalError::InvalidArgument(format!("threshold {threshold} outside [0,1]")));
    }
    let roc_auc = roc_auc(scores, labels)?;
    let confusion = Confusion::at_threshold(scores, labels, threshold);
    Ok(ClassificationMetrics {
        sensitivity: confusion.sensitivity(),
        specificity: confusion.specificity(),
        accuracy: confusion.accuracy(),
        roc_auc,
        confusion,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegressionMetrics {
    pub mae: f64,
    pub rmse: f64,
}

impl RegressionMetrics {
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        vec![("mae", self.mae), ("rmse", self.rmse)]
    }
}

/// Errors are summed in sorted order so the result does not depend on row
/// order.
pub fn regression_metrics(y: &[f64], predicted: &[f64]) -> Result<RegressionMetrics, EvalError> {
    if y.len() != predicted.len() {
        return Err(EvalError::LengthMismatch(y.len(), predicted.len()));
    }
    if y.is_empty() {
        return Err(EvalError::TooShort { need: 1, got: 0 });
    }
    let mut abs: Vec<f64> = y.iter().zip(predicted).map(|(a, b)| (a - b).abs()).collect();
    abs.sort_by(f64::total_cmp);
    let n = abs.len() as f64;
    let mae = abs.iter().sum::<f64>() / n;
    let rmse = (abs.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    Ok(RegressionMetrics { mae, rmse: rmse.max(mae) })
}

/// Pearson correlation of midranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 3 {
        return Err(EvalError::TooShort { need: 3, got: a.len() });
    }
    let (ra, rb) = (midranks(a), midranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(EvalError::Constant);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}
