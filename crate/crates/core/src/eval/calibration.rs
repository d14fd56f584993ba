use std::io::Write;

use serde::Serialize;

use super::EvalError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_score: Option<f64>,
    pub positive_fraction: Option<f64>,
    /// Mean of `max(s, 1 - s)`.
    pub mean_confidence: Option<f64>,
    /// Share of correct labels with prediction `s > 0.5`.
    pub accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationCurve {
    pub n: usize,
    pub bins: Vec<CalibrationBin>,
    /// `sum(count / n * |accuracy - confidence|)` over non-empty bins.
    pub reliability_gap: f64,
}

/// Equal-width bins on `[0, 1]`; a score of exactly 1 falls in the top bin.
pub fn calibration_curve(scores: &[f64], labels: &[bool], bins: usize) -> Result<CalibrationCurve, EvalError> {
    if bins < 2 {
        return Err(EvalError::InvalidArgument(format!("need at least 2 bins, got {bins}")));
    }
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch(scores.len(), labels.len()));
    }
    if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(EvalError::InvalidArgument(format!("score {s} outside [0,1]")));
    }
    #[derive(Default, Clone, Copy)]
    struct Acc {
        count: usize,
        score: f64,
        positives: usize,
        confidence: f64,
        correct: usize,
    }
    let mut acc = vec![Acc::default(); bins];
    for (&s, &l) in scores.iter().zip(labels) {
        let b = ((s * bins as f64) as usize).min(bins - 1);
        let a = &mut acc[b];
        a.count += 1;
        a.score += s;
        a.positives += usize::from(l);
        a.confidence += s.max(1.0 - s);
        a.correct += usize::from((s > 0.5) == l);
    }
    let n = scores.len();
    let mut gap = 0.0;
    let out = acc
        .iter()
        .enumerate()
        .map(|(b, a)| {
            let c = a.count as f64;
            let nonempty = a.count > 0;
            if nonempty {
                gap += c / n as f64 * (a.correct as f64 / c - a.confidence / c).abs();
            }
            let avg = |v: f64| nonempty.then(|| v / c);
            CalibrationBin {
                lower: b as f64 / bins as f64,
                upper: (b + 1) as f64 / bins as f64,
                count: a.count,
                mean_score: avg(a.score),
                positive_fraction: avg(a.positives as f64),
                mean_confidence: avg(a.confidence),
                accuracy: avg(a.correct as f64),
            }
        })
        .collect();
    Ok(CalibrationCurve {
        n,
        bins: out,
        reliability_gap: gap,
    })
}

impl CalibrationCurve {
    /// `lower,upper,count,mean_score,positive_fraction`; empty fields for
    /// empty bins.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lower", "upper", "count", "mean_score", "positive_fraction"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for b in &self.bins {
            w.write_record([
                b.lower.to_string(),
                b.upper.to_string(),
                b.count.to_string(),
                opt(b.mean_score),
                opt(b.positive_fraction),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
