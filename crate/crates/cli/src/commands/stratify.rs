use std::collections::HashMap;
use std::path::Path;

use serde::Serialize;

use lexiscreen::corpus::kfold_assign;
use lexiscreen::risk::{
    assign_bands, bands_by_mmse, bands_by_severity, search_thresholds, search_thresholds_cv, write_band_rows_csv,
    CvThresholdSearch, RiskError, RiskThresholds, SelectiveReport,
};
use lexiscreen::{Dataset, TranscriptRecord};

use super::{dataset, Context};
use crate::artifacts::{Artifacts, Stamp};
use crate::config::Settings;
use crate::error::{Failure, Outcome, Status, Tag};
use crate::StratifyArgs;

fn risk_failure(e: RiskError, what: &str) -> Failure {
    let status = match e {
        RiskError::InvalidThresholds { .. } | RiskError::InvalidResolution(_) | RiskError::InvalidCoverage(_) => Status::Usage,
        _ => Status::Data,
    };
    Failure::new(status, anyhow::Error::new(e).context(what.to_string()))
}

/// Ids and scores from a predictions file with `id` and `score` columns.
fn read_scores(path: &Path) -> Outcome<(Vec<String>, Vec<f64>)> {
    let mut reader = csv::Reader::from_path(path).data(|| format!("cannot open {}", path.display()))?;
    let headers = reader.headers().data(|| format!("cannot read header of {}", path.display()))?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Failure::data(format!("{} has no `{name}` column (stratify needs classification scores)", path.display()))
        })
    };
    let (id_col, score_col) = (column("id")?, column("score")?);
    let mut ids = Vec::new();
    let mut scores = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.data(|| format!("{} row {}", path.display(), i + 2))?;
        let raw = row.get(score_col).unwrap_or("");
        let s: f64 = raw
            .parse()
            .map_err(|_| Failure::data(format!("{} line {}: score `{raw}` is not a number", path.display(), i + 2)))?;
        ids.push(row.get(id_col).unwrap_or("").to_string());
        scores.push(s);
    }
    if ids.is_empty() {
        return Err(Failure::data(format!("{} has no rows", path.display())));
    }
    Ok((ids, scores))
}

fn records<'a>(data: &'a Dataset, ids: &[String]) -> Outcome<Vec<&'a TranscriptRecord>> {
    let by_id: HashMap<&str, &TranscriptRecord> = data.iter().map(|r| (r.id.as_str(), r)).collect();
    ids.iter()
        .map(|id| by_id.get(id.as_str()).copied().ok_or_else(|| Failure::data(format!("no record with id `{id}` in --data"))))
        .collect()
}

#[derive(Serialize)]
struct ThresholdsFile<'a> {
    #[serde(flatten)]
    stamp: Stamp,
    green_upper: f64,
    amber_upper: f64,
    resolution: f64,
    min_coverage: f64,
    objective: &'static str,
    trace_path: &'static str,
    folds: usize,
    cross_validation: &'a CvThresholdSearch,
    /// The selected pair applied to all records.
    selective: &'a SelectiveReport,
}

pub fn run(ctx: &Context, settings: &mut Settings, args: &StratifyArgs) -> Outcome<()> {
    let scores_path = settings.required_input("scores", args.scores.clone())?;
    let data_path = settings.input("data", args.data.clone())?;
    let search = settings.flag("search", args.search)?;
    let (ids, scores) = read_scores(&scores_path)?;
    let data = data_path.as_deref().map(dataset).transpose()?;
    let recs = data.as_ref().map(|d| records(d, &ids)).transpose()?;
    let mut out = Artifacts::create(&ctx.out_dir)?;

    let thresholds = if search {
        if args.green.is_some() || args.amber.is_some() {
            return Err(Failure::usage("--search cannot be combined with --green/--amber"));
        }
        let recs = recs.as_ref().ok_or_else(|| Failure::usage("--search needs --data for labels"))?;
        let labels: Vec<bool> = recs
            .iter()
            .map(|r| r.diagnosis.ok_or_else(|| Failure::data(format!("record `{}` has no diagnosis", r.id))))
            .collect::<Outcome<_>>()?;
        let resolution = settings.value("resolution", args.resolution, 0.1f64)?;
        let min_coverage = settings.value("min-coverage", args.min_coverage, 0.5f64)?;
        let k = settings.value("folds", args.folds, 10usize)?;
        if k < 2 {
            return Err(Failure::usage("--folds must be at least 2"));
        }
        let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let strata: Vec<usize> = labels.iter().map(|&l| usize::from(l)).collect();
        let fold_of = kfold_assign(&id_refs, &strata, k, settings.seed()).data(|| "cannot assign folds".to_string())?;
        let cv = search_thresholds_cv(&scores, &labels, &fold_of, k, resolution, min_coverage)
            .map_err(|e| risk_failure(e, "threshold search failed"))?;
        let full = search_thresholds(&scores, &labels, resolution, min_coverage).map_err(|e| risk_failure(e, "threshold search failed"))?;
        let selective = lexiscreen::risk::selective_metrics(&scores, &labels, &cv.thresholds)
            .map_err(|e| risk_failure(e, "selective metrics at the chosen thresholds"))?;
        out.write_csv("threshold_trace.csv", |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record([
                "green_upper", "amber_upper", "green", "amber", "red", "coverage", "youden_j", "retained_auc", "sensitivity",
                "specificity", "feasible", "note",
            ])?;
            let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            for e in &full.trace {
                w.write_record([
                    e.green_upper.to_string(),
                    e.amber_upper.to_string(),
                    e.counts.green.to_string(),
                    e.counts.amber.to_string(),
                    e.counts.red.to_string(),
                    e.coverage.to_string(),
                    opt(e.youden_j),
                    opt(e.retained_auc),
                    opt(e.sensitivity),
                    opt(e.specificity),
                    e.feasible.to_string(),
                    e.note.clone().unwrap_or_default(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
        out.write_json(
            "thresholds.json",
            &ThresholdsFile {
                stamp: Stamp::of(settings),
                green_upper: cv.thresholds.green_upper,
                amber_upper: cv.thresholds.amber_upper,
                resolution,
                min_coverage,
                objective: full.objective,
                trace_path: "threshold_trace.csv",
                folds: k,
                cross_validation: &cv,
                selective: &selective,
            },
        )?;
        cv.thresholds
    } else {
        let reference = RiskThresholds::reference();
        let g = settings.value("green", args.green, reference.green_upper)?;
        let a = settings.value("amber", args.amber, reference.amber_upper)?;
        let t = RiskThresholds::new(g, a).map_err(|e| risk_failure(e, "invalid thresholds"))?;
        if let Some(recs) = &recs {
            let labelled: Option<Vec<bool>> = recs.iter().map(|r| r.diagnosis).collect();
            if let Some(labels) = labelled {
                match lexiscreen::risk::selective_metrics(&scores, &labels, &t) {
                    Ok(r) => log::info!(
                        "coverage {:.4}, retained sensitivity {:.4}, specificity {:.4}",
                        r.coverage,
                        r.metrics.sensitivity,
                        r.metrics.specificity
                    ),
                    Err(e) => log::warn!("selective metrics unavailable: {e}"),
                }
            }
        }
        t
    };

    let bands = assign_bands(&scores, &thresholds).map_err(|e| risk_failure(e, "cannot assign bands"))?;
    out.write_csv("bands.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["id", "score", "band"])?;
        for ((id, s), b) in ids.iter().zip(&scores).zip(&bands) {
            w.write_record([id.clone(), s.to_string(), b.as_str().to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    if let Some(recs) = &recs {
        let mmse: Vec<Option<u8>> = recs.iter().map(|r| r.mmse).collect();
        if mmse.iter().any(Option::is_some) {
            let by_mmse = bands_by_mmse(&scores, &mmse, &thresholds).map_err(|e| risk_failure(e, "MMSE table"))?;
            let by_sev = bands_by_severity(&scores, &mmse, &thresholds).map_err(|e| risk_failure(e, "severity table"))?;
            out.write_csv("bands_by_mmse.csv", |buf| write_band_rows_csv(&by_mmse, "mmse", buf))?;
            out.write_csv("bands_by_severity.csv", |buf| write_band_rows_csv(&by_sev, "severity", buf))?;
        }
    }
    out.finish(settings)?;
    Ok(())
}
