use super::{feature_table, model, model_failure, write_predictions, Context};
use crate::artifacts::Artifacts;
use crate::config::Settings;
use crate::error::Outcome;
use crate::PredictArgs;

pub fn run(ctx: &Context, settings: &mut Settings, args: &PredictArgs) -> Outcome<()> {
    let model_path = settings.required_input("model", args.model.clone())?;
    let features = settings.required_input("features", args.features.clone())?;
    let output = settings.value("output", args.output.clone(), "predictions.csv".to_string())?;
    let model = model(&model_path)?;
    let table = feature_table(&features)?;
    let scores = model
        .predict_table(&table)
        .map_err(|e| model_failure(e, || format!("cannot apply model to {}", features.display())))?;
    let mut out = Artifacts::create(&ctx.out_dir)?;
    out.write_csv(&output, |buf| write_predictions(buf, model.task(), table.ids(), &scores))?;
    out.finish(settings)?;
    Ok(())
}
