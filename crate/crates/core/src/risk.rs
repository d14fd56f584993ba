//! Green/Amber/Red risk bands, selective classification metrics and band
//! threshold search.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{severity_group, SeverityGroup};
use crate::eval::{classification_metrics, ClassificationMetrics, EvalError};

/// Two grid points closer than this count as the same value.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RiskError {
    #[error("thresholds must satisfy 0 < green_upper < amber_upper < 1, got ({green_upper}, {amber_upper})")]
    InvalidThresholds { green_upper: f64, amber_upper: f64 },
    #[error("score {0} outside [0,1]")]
    ScoreOutOfRange(f64),
    #[error("length mismatch: {0} scores, {1} labels")]
    LengthMismatch(usize, usize),
    #[error("every sample falls in the Amber band ({0} samples)")]
    AllAmber(usize),
    #[error("retained samples are single-class (green {green}, amber {amber}, red {red}; {positives} positive, {negatives} negative retained)")]
    SingleClassRetained {
        green: usize,
        amber: usize,
        red: usize,
        positives: usize,
        negatives: usize,
    },
    #[error("resolution {0} must divide 1 into at least 3 steps")]
    InvalidResolution(f64),
    #[error("min_coverage must lie in [0,1], got {0}")]
    InvalidCoverage(f64),
    #[error("no threshold pair retains both classes with coverage >= {min_coverage}")]
    NoFeasiblePair { min_coverage: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Green `[0, g]`, Amber `(g, a]`, Red `(a, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskThresholds {
    pub green_upper: f64,
    pub amber_upper: f64,
}

impl RiskThresholds {
    pub fn new(green_upper: f64, amber_upper: f64) -> Result<Self, RiskError> {
        if !(0.0 < green_upper && green_upper < amber_upper && amber_upper < 1.0) {
            return Err(RiskError::InvalidThresholds { green_upper, amber_upper });
        }
        Ok(RiskThresholds { green_upper, amber_upper })
    }

    /// `[0, 0.45]`, `(0.45, 0.65]`, `(0.65, 1]`.
    pub fn reference() -> Self {
        RiskThresholds {
            green_upper: 0.45,
            amber_upper: 0.65,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Band {
    Green,
    Amber,
    Red,
}

impl Band {
    pub fn as_str(self) -> &'static str {
        match self {
            Band::Green => "Green",
            Band::Amber => "Amber",
            Band::Red => "Red",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn band_of(score: f64, t: &RiskThresholds) -> Result<Band, RiskError> {
    if !(0.0..=1.0).contains(&score) {
        return Err(RiskError::ScoreOutOfRange(score));
    }
    Ok(if score <= t.green_upper {
        Band::Green
    } else if score <= t.amber_upper {
        Band::Amber
    } else {
        Band::Red
    })
}

pub fn youden_j(sensitivity: f64, specificity: f64) -> f64 {
    sensitivity + specificity - 1.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BandCounts {
    pub green: usize,
    pub amber: usize,
    pub red: usize,
}

impl BandCounts {
    pub fn total(&self) -> usize {
        self.green + self.amber + self.red
    }

    fn add(&mut self, b: Band) {
        match b {
            Band::Green => self.green += 1,
            Band::Amber => self.amber += 1,
            Band::Red => self.red += 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SelectiveReport {
    /// `(green + red) / n`.
    pub coverage: f64,
    pub counts: BandCounts,
    /// Metrics on Green and Red samples with Red as the positive prediction.
    pub metrics: ClassificationMetrics,
}

impl SelectiveReport {
    pub fn youden_j(&self) -> f64 {
        youden_j(self.metrics.sensitivity, self.metrics.specificity)
    }
}

/// Bands of every score.
pub fn assign_bands(scores: &[f64], t: &RiskThresholds) -> Result<Vec<Band>, RiskError> {
    scores.iter().map(|&s| band_of(s, t)).collect()
}

/// Metrics on the non-Amber samples only.
pub fn selective_metrics(scores: &[f64], labels: &[bool], t: &RiskThresholds) -> Result<SelectiveReport, RiskError> {
    if scores.len() != labels.len() {
        return Err(RiskError::LengthMismatch(scores.len(), labels.len()));
    }
    let bands = assign_bands(scores, t)?;
    let mut counts = BandCounts::default();
    let mut kept_scores = Vec::new();
    let mut kept_labels = Vec::new();
    for ((&s, &l), &b) in scores.iter().zip(labels).zip(&bands) {
        counts.add(b);
        if b != Band::Amber {
            kept_scores.push(s);
            kept_labels.push(l);
        }
    }
    if kept_scores.is_empty() {
        return Err(RiskError::AllAmber(scores.len()));
    }
    let positives = kept_labels.iter().filter(|&&l| l).count();
    let negatives = kept_labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(RiskError::SingleClassRetained {
            green: counts.green,
            amber: counts.amber,
            red: counts.red,
            positives,
            negatives,
        });
    }
    let metrics = classification_metrics(&kept_scores, &kept_labels, t.amber_upper)?;
    Ok(SelectiveReport {
        coverage: kept_scores.len() as f64 / scores.len() as f64,
        counts,
        metrics,
    })
}

/// One grid point of a threshold search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    pub green_upper: f64,
    pub amber_upper: f64,
    pub counts: BandCounts,
    pub coverage: f64,
    pub youden_j: Option<f64>,
    pub retained_auc: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    /// Meets the coverage constraint and retains both classes.
    pub feasible: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdSearch {
    pub thresholds: RiskThresholds,
    pub resolution: f64,
    pub min_coverage: f64,
    pub objective: &'static str,
    pub best: TraceEntry,
    pub trace: Vec<TraceEntry>,
}

/// Grid points `i / steps` for `0 < i < steps`.
pub fn threshold_grid(resolution: f64) -> Result<Vec<f64>, RiskError> {
    if !(resolution > 0.0 && resolution < 1.0) {
        return Err(RiskError::InvalidResolution(resolution));
    }
    let steps = (1.0 / resolution).round() as usize;
    if steps < 3 || (steps as f64 * resolution - 1.0).abs() > 1e-9 {
        return Err(RiskError::InvalidResolution(resolution));
    }
    Ok((1..steps).map(|i| i as f64 / steps as f64).collect())
}

/// Evaluate one pair the way the search does.
pub fn trace_entry(scores: &[f64], labels: &[bool], t: &RiskThresholds, min_coverage: f64) -> Result<TraceEntry, RiskError> {
    let mut counts = BandCounts::default();
    for b in assign_bands(scores, t)? {
        counts.add(b);
    }
    let coverage = (counts.green + counts.red) as f64 / scores.len().max(1) as f64;
    let base = TraceEntry {
        green_upper: t.green_upper,
        amber_upper: t.amber_upper,
        counts,
        coverage,
        youden_j: None,
        retained_auc: None,
        sensitivity: None,
        specificity: None,
        feasible: false,
        note: None,
    };
    match selective_metrics(scores, labels, t) {
        Ok(r) => {
            let feasible = coverage >= min_coverage;
            Ok(TraceEntry {
                youden_j: Some(r.youden_j()),
                retained_auc: Some(r.metrics.roc_auc),
                sensitivity: Some(r.metrics.sensitivity),
                specificity: Some(r.metrics.specificity),
                feasible,
                note: (!feasible).then(|| format!("coverage {coverage:.4} below {min_coverage}")),
                ..base
            })
        }
        Err(e @ (RiskError::AllAmber(_) | RiskError::SingleClassRetained { .. })) => Ok(TraceEntry {
            note: Some(e.to_string()),
            ..base
        }),
        Err(e) => Err(e),
    }
}

fn better(a: &TraceEntry, b: &TraceEntry) -> bool {
    let (ja, jb) = (a.youden_j.unwrap_or(f64::NEG_INFINITY), b.youden_j.unwrap_or(f64::NEG_INFINITY));
    if (ja - jb).abs() > TIE_EPS {
        return ja > jb;
    }
    let (ua, ub) = (a.retained_auc.unwrap_or(0.0), b.retained_auc.unwrap_or(0.0));
    ua > ub + TIE_EPS
}

/// Search every grid pair `0 < g < a < 1`. The objective is Youden's J on
/// retained samples among pairs with coverage at least `min_coverage`;
/// ties go to the higher retained AUC, then to the smaller pair (the grid is
/// scanned with `g` then `a` ascending and only strict improvements win).
pub fn search_thresholds(scores: &[f64], labels: &[bool], resolution: f64, min_coverage: f64) -> Result<ThresholdSearch, RiskError> {
    if scores.len() != labels.len() {
        return Err(RiskError::LengthMismatch(scores.len(), labels.len()));
    }
    if !(0.0..=1.0).contains(&min_coverage) {
        return Err(RiskError::InvalidCoverage(min_coverage));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(EvalError::SingleClass {
            positives,
            negatives: labels.len() - positives,
        }
        .into());
    }
    let grid = threshold_grid(resolution)?;
    let mut trace = Vec::new();
    for (i, &g) in grid.iter().enumerate() {
        for &a in &grid[i + 1..] {
            trace.push(trace_entry(scores, labels, &RiskThresholds { green_upper: g, amber_upper: a }, min_coverage)?);
        }
    }
    let mut best: Option<&TraceEntry> = None;
    for e in trace.iter().filter(|e| e.feasible) {
        if best.is_none_or(|b| better(e, b)) {
            best = Some(e);
        }
    }
    let best = best.cloned().ok_or(RiskError::NoFeasiblePair { min_coverage })?;
    Ok(ThresholdSearch {
        thresholds: RiskThresholds {
            green_upper: best.green_upper,
            amber_upper: best.amber_upper,
        },
        resolution,
        min_coverage,
        objective: "youden_j",
        best,
        trace,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoldThresholds {
    pub fold: usize,
    pub thresholds: Option<RiskThresholds>,
    /// Selective metrics of the chosen pair on the held-out fold.
    pub held_out: Option<SelectiveReport>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CvThresholdSearch {
    pub thresholds: RiskThresholds,
    /// Folds that chose the selected pair.
    pub votes: usize,
    pub folds: Vec<FoldThresholds>,
}

/// For each fold, search on the other folds and score the chosen pair on the
/// held-out fold; the most frequent pair wins, ties to smaller thresholds.
pub fn search_thresholds_cv(
    scores: &[f64],
    labels: &[bool],
    fold_of: &[usize],
    k: usize,
    resolution: f64,
    min_coverage: f64,
) -> Result<CvThresholdSearch, RiskError> {
    if scores.len() != labels.len() || scores.len() != fold_of.len() {
        return Err(RiskError::LengthMismatch(scores.len(), labels.len()));
    }
    let mut folds = Vec::with_capacity(k);
    let mut votes: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    for fold in 0..k {
        let pick = |held: bool| -> (Vec<f64>, Vec<bool>) {
            (0..scores.len())
                .filter(|&i| (fold_of[i] == fold) == held)
                .map(|i| (scores[i], labels[i]))
                .unzip()
        };
        let (train_s, train_l) = pick(false);
        let (test_s, test_l) = pick(true);
        match search_thresholds(&train_s, &train_l, resolution, min_coverage) {
            Ok(s) => {
                let t = s.thresholds;
                *votes.entry((t.green_upper.to_bits(), t.amber_upper.to_bits())).or_insert(0) += 1;
                let held = selective_metrics(&test_s, &test_l, &t);
                let note = held.as_ref().err().map(|e| e.to_string());
                folds.push(FoldThresholds {
                    fold,
                    thresholds: Some(t),
                    held_out: held.ok(),
                    note,
                });
            }
            Err(e) => folds.push(FoldThresholds {
                fold,
                thresholds: None,
                held_out: None,
                note: Some(e.to_string()),
            }),
        }
    }
    let mut best: Option<(RiskThresholds, usize)> = None;
    for (&(g, a), &n) in &votes {
        let t = RiskThresholds {
            green_upper: f64::from_bits(g),
            amber_upper: f64::from_bits(a),
        };
        let replace = match best {
            None => true,
            Some((b, bn)) => n > bn || (n == bn && (t.green_upper, t.amber_upper) < (b.green_upper, b.amber_upper)),
        };
        if replace {
            best = Some((t, n));
        }
    }
    let (thresholds, votes) = best.ok_or(RiskError::NoFeasiblePair { min_coverage })?;
    Ok(CvThresholdSearch { thresholds, votes, folds })
}

/// Band counts and mean score for one group of samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandRow {
    pub key: String,
    pub n: usize,
    pub mean_score: Option<f64>,
    pub counts: BandCounts,
}

fn band_rows(keys: &[String], groups: &[Option<usize>], scores: &[f64], t: &RiskThresholds) -> Result<Vec<BandRow>, RiskError> {
    let mut rows: Vec<(usize, f64, BandCounts)> = vec![(0, 0.0, BandCounts::default()); keys.len()];
    for (g, &s) in groups.iter().zip(scores) {
        let Some(g) = g else { continue };
        let b = band_of(s, t)?;
        let r = &mut rows[*g];
        r.0 += 1;
        r.1 += s;
        r.2.add(b);
    }
    Ok(keys
        .iter()
        .zip(rows)
        .map(|(k, (n, sum, counts))| BandRow {
            key: k.clone(),
            n,
            mean_score: (n > 0).then(|| sum / n as f64),
            counts,
        })
        .collect())
}

/// One row per MMSE score 0..=30.
pub fn bands_by_mmse(scores: &[f64], mmse: &[Option<u8>], t: &RiskThresholds) -> Result<Vec<BandRow>, RiskError> {
    if scores.len() != mmse.len() {
        return Err(RiskError::LengthMismatch(scores.len(), mmse.len()));
    }
    let keys: Vec<String> = (0..=30).map(|m: u8| m.to_string()).collect();
    let groups: Vec<Option<usize>> = mmse.iter().map(|m| m.map(usize::from)).collect();
    band_rows(&keys, &groups, scores, t)
}

/// One row per severity group.
pub fn bands_by_severity(scores: &[f64], mmse: &[Option<u8>], t: &RiskThresholds) -> Result<Vec<BandRow>, RiskError> {
    if scores.len() != mmse.len() {
        return Err(RiskError::LengthMismatch(scores.len(), mmse.len()));
    }
    let keys: Vec<String> = SeverityGroup::ALL.iter().map(|g| g.as_str().to_string()).collect();
    let groups: Vec<Option<usize>> = mmse
        .iter()
        .map(|m| {
            m.and_then(|m| severity_group(i64::from(m)).ok())
                .and_then(|g| SeverityGroup::ALL.iter().position(|x| *x == g))
        })
        .collect();
    band_rows(&keys, &groups, scores, t)
}

/// `<key_name>,n,mean_score,green,amber,red`.
pub fn write_band_rows_csv<W: Write>(rows: &[BandRow], key_name: &str, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([key_name, "n", "mean_score", "green", "amber", "red"])?;
    for r in rows {
        w.write_record([
            r.key.clone(),
            r.n.to_string(),
            r.mean_score.map(|v| v.to_string()).unwrap_or_default(),
            r.counts.green.to_string(),
            r.counts.amber.to_string(),
            r.counts.red.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::RngExt;

    #[test]
    fn boundaries() {
        let t = RiskThresholds::reference();
        assert_eq!(band_of(0.45, &t).unwrap(), Band::Green);
        assert_eq!(band_of(0.65, &t).unwrap(), Band::Amber);
        assert_eq!(band_of(0.66, &t).unwrap(), Band::Red);
        assert_eq!(band_of(0.0, &t).unwrap(), Band::Green);
        assert_eq!(band_of(1.0, &t).unwrap(), Band::Red);
        assert!(band_of(1.01, &t).is_err());
        assert!(band_of(-0.1, &t).is_err());
        assert!(RiskThresholds::new(0.6, 0.5).is_err());
        assert!(RiskThresholds::new(0.0, 0.5).is_err());
    }

    #[test]
    fn youden_examples() {
        assert_eq!(youden_j(1.0, 1.0), 1.0);
        assert_eq!(youden_j(0.5, 0.5), 0.0);
        assert_abs_diff_eq!(youden_j(0.676, 0.967), 0.643, epsilon = 1e-9);
    }

    #[test]
    fn selective_example() {
        let r = selective_metrics(&[0.1, 0.5, 0.9], &[false, true, true], &RiskThresholds::reference()).unwrap();
        assert_abs_diff_eq!(r.coverage, 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!((r.metrics.sensitivity, r.metrics.specificity), (1.0, 1.0));
        assert_eq!(r.counts, BandCounts { green: 1, amber: 1, red: 1 });
    }

    #[test]
    fn selective_guards() {
        let t = RiskThresholds::reference();
        assert!(matches!(selective_metrics(&[0.5, 0.6], &[true, false], &t), Err(RiskError::AllAmber(2))));
        let err = selective_metrics(&[0.1, 0.5, 0.2], &[false, true, false], &t).unwrap_err();
        assert!(err.to_string().contains("green 2, amber 1, red 0"), "{err}");
    }

    #[test]
    fn no_amber_equals_plain_metrics() {
        let scores = [0.1, 0.3, 0.8, 0.9, 0.2, 0.95];
        let labels = [false, true, true, true, false, false];
        let t = RiskThresholds::new(0.4, 0.7).unwrap();
        let r = selective_metrics(&scores, &labels, &t).unwrap();
        assert_eq!(r.coverage, 1.0);
        assert_eq!(r.metrics, classification_metrics(&scores, &labels, 0.7).unwrap());
    }

    #[test]
    fn grid_size() {
        assert_eq!(threshold_grid(0.1).unwrap().len(), 9);
        assert!(threshold_grid(0.3).is_err());
        assert!(threshold_grid(0.5).is_err());
        let mut rng = rng::stream(1);
        let scores: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
        let labels: Vec<bool> = scores.iter().map(|&s| rng.random::<f64>() < s).collect();
        let s = search_thresholds(&scores, &labels, 0.1, 0.0).unwrap();
        assert_eq!(s.trace.len(), 36);
    }

    #[test]
    fn separated_scores_pick_smallest_pair() {
        let mut rng = rng::stream(3);
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..40 {
            scores.push(rng.random::<f64>() * 0.2 * 0.999);
            labels.push(false);
            scores.push(0.8 + 0.2 * rng.random::<f64>() + 1e-9);
            labels.push(true);
        }
        let s = search_thresholds(&scores, &labels, 0.1, 0.5).unwrap();
        assert_eq!(s.best.youden_j, Some(1.0));
        assert_eq!((s.thresholds.green_upper, s.thresholds.amber_upper), (0.1, 0.2));
    }

    #[test]
    fn identical_scores_error() {
        let labels = [true, false, true, false, true, false, true, false, true, false];
        let s = search_thresholds(&[0.5; 10], &labels, 0.1, 0.5).unwrap();
        assert!(s.trace.iter().filter(|e| e.feasible).all(|e| e.youden_j == Some(0.0)));
        assert!(s.trace.iter().any(|e| !e.feasible && e.note.as_deref().unwrap_or("").contains("Amber")));
        let r = search_thresholds(&[0.5; 10], &labels, 0.1, 1.0 + 1e-9);
        assert!(matches!(r, Err(RiskError::InvalidCoverage(_))));
        let r = search_thresholds(&[0.15, 0.15, 0.85, 0.85], &[true, false, true, false], 0.1, 1.0);
        assert!(r.unwrap().best.youden_j == Some(0.0));
    }

    #[test]
    fn trace_replays() {
        let mut rng = rng::stream(8);
        let scores: Vec<f64> = (0..80).map(|_| rng.random::<f64>()).collect();
        let labels: Vec<bool> = scores.iter().map(|&s| rng.random::<f64>() < s).collect();
        let s = search_thresholds(&scores, &labels, 0.1, 0.5).unwrap();
        for e in &s.trace {
            let t = RiskThresholds { green_upper: e.green_upper, amber_upper: e.amber_upper };
            assert_eq!(&trace_entry(&scores, &labels, &t, 0.5).unwrap(), e);
        }
        assert!(s.best.feasible);
        assert!(s.trace.iter().filter(|e| e.feasible).all(|e| e.youden_j.unwrap() <= s.best.youden_j.unwrap() + 1e-12));
    }

    #[test]
    fn cv_search_votes() {
        let mut rng = rng::stream(4);
        let scores: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
        let labels: Vec<bool> = scores.iter().map(|&s| rng.random::<f64>() < s).collect();
        let folds: Vec<usize> = (0..100).map(|i| i % 5).collect();
        let r = search_thresholds_cv(&scores, &labels, &folds, 5, 0.1, 0.5).unwrap();
        assert_eq!(r.folds.len(), 5);
        let chosen = r.folds.iter().filter(|f| f.thresholds == Some(r.thresholds)).count();
        assert_eq!(chosen, r.votes);
        assert!(r.votes >= 1);
    }

    #[test]
    fn tables() {
        let t = RiskThresholds::reference();
        let rows = bands_by_mmse(&[0.1, 0.9, 0.5], &[Some(30), Some(12), None], &t).unwrap();
        assert_eq!(rows.len(), 31);
        assert_eq!(rows[30].counts.green, 1);
        let sev = bands_by_severity(&[0.1, 0.9, 0.5], &[Some(30), Some(12), Some(26)], &t).unwrap();
        assert_eq!(sev.iter().map(|r| r.n).collect::<Vec<_>>(), [1, 1, 1, 0]);
        assert_eq!(sev[1].counts.amber, 1);
    }

    proptest! {
        #[test]
        fn band_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0, g in 0.05f64..0.5, w in 0.01f64..0.45) {
            let t = RiskThresholds::new(g, g + w).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(band_of(lo, &t).unwrap() <= band_of(hi, &t).unwrap());
        }

        #[test]
        fn wider_amber_never_shrinks(scores in prop::collection::vec(0.0f64..=1.0, 1..60), g in 0.1f64..0.4, w1 in 0.01f64..0.2, extra in 0.0f64..0.3) {
            let narrow = RiskThresholds::new(g, g + w1).unwrap();
            let wide = RiskThresholds::new(g, (g + w1 + extra).min(0.99)).unwrap();
            let amber = |t: &RiskThresholds| scores.iter().filter(|&&s| band_of(s, t).unwrap() == Band::Amber).count();
            prop_assert!(amber(&wide) >= amber(&narrow));
        }
    }
}
