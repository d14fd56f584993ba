use lexiscreen::corpus::{generate_synthetic, write_jsonl, SyntheticSpec};

use super::Context;
use crate::artifacts::Artifacts;
use crate::config::Settings;
use crate::error::{Outcome, Tag};
use crate::SynthArgs;

pub fn run(ctx: &Context, settings: &mut Settings, args: &SynthArgs) -> Outcome<()> {
    let base = SyntheticSpec::default();
    let n_positive = settings.value("n-positive", args.n_positive, base.n_positive)?;
    let n_negative = settings.value("n-negative", args.n_negative, base.n_negative)?;
    let null = settings.flag("null", args.null)?;
    let id_prefix = settings.value("id-prefix", args.id_prefix.clone(), base.id_prefix.clone())?;
    let output = settings.value("output", args.output.clone(), "corpus.jsonl".to_string())?;
    let mut spec = if null {
        SyntheticSpec::null(n_positive, n_negative)
    } else {
        base.with_sizes(n_positive, n_negative)
    };
    spec.id_prefix = id_prefix;
    let dataset = generate_synthetic(&spec, settings.seed()).data(|| "cannot generate corpus".to_string())?;
    let mut buf = Vec::new();
    write_jsonl(&dataset, &mut buf).internal(|| "cannot format corpus".to_string())?;
    let mut out = Artifacts::create(&ctx.out_dir)?;
    out.write(&output, &buf)?;
    out.finish(settings)?;
    Ok(())
}
