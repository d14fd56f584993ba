use lexiscreen::explain::{risk_breakdown, summarize_importance, ExplainError, FeatureStats};

use super::{feature_table, model, Context};
use crate::artifacts::Artifacts;
use crate::config::Settings;
use crate::error::{Failure, Outcome, Status};
use crate::ExplainArgs;

fn explain_failure(e: ExplainError) -> Failure {
    let status = match &e {
        ExplainError::Model(m) => crate::error::model_status(m),
        ExplainError::Empty => Status::Data,
        _ => Status::Model,
    };
    Failure::new(status, anyhow::Error::new(e).context("explanation failed"))
}

pub fn run(ctx: &Context, settings: &mut Settings, args: &ExplainArgs) -> Outcome<()> {
    let model_path = settings.required_input("model", args.model.clone())?;
    let features = settings.required_input("features", args.features.clone())?;
    let reference = settings.input("reference-features", args.reference_features.clone())?;
    let top_k = settings.value("top-k", args.top_k, 10usize)?;
    let model = model(&model_path)?;
    let table = feature_table(&features)?;
    let summary = summarize_importance(&model, &table).map_err(explain_failure)?;
    let stats = match reference {
        Some(p) => {
            let reference = feature_table(&p)?;
            if reference.fingerprint() != table.fingerprint() {
                return Err(Failure::data(format!(
                    "reference features use schema {} but explained features use {}",
                    reference.fingerprint(),
                    table.fingerprint()
                )));
            }
            FeatureStats::from_rows(reference.rows())
        }
        None => {
            log::warn!("no --reference-features; standardizing breakdowns by the explained table itself");
            FeatureStats::from_rows(table.rows())
        }
    }
    .map_err(explain_failure)?;

    let mut rows = Vec::new();
    for ((id, attr), x) in summary.ids.iter().zip(&summary.attributions).zip(table.rows()) {
        let parts = risk_breakdown(attr, table.names(), x, &stats).map_err(explain_failure)?;
        for (rank, c) in parts.into_iter().take(top_k).enumerate() {
            rows.push([
                id.clone(),
                (rank + 1).to_string(),
                c.feature,
                c.value.to_string(),
                c.normalized.to_string(),
                c.phi.to_string(),
            ]);
        }
    }

    let mut out = Artifacts::create(&ctx.out_dir)?;
    out.write_csv("importance.csv", |buf| summary.write_importance_csv(buf))?;
    out.write_csv("explanations.csv", |buf| summary.write_explanations_csv(buf))?;
    out.write_csv("breakdown.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["id", "rank", "feature", "value", "normalized", "phi"])?;
        for r in &rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    })?;
    out.finish(settings)?;
    Ok(())
}
