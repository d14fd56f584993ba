use lexiscreen::features::{Extractor, PosLexicon};
use lexiscreen::lexicon::parse_dictionary;
use lexiscreen::{FeatureSchema, Lexicon};

use super::{dataset, Context};
use crate::artifacts::Artifacts;
use crate::config::Settings;
use crate::error::{Failure, Outcome, Tag};
use crate::ExtractArgs;

fn read(path: &std::path::Path) -> Outcome<String> {
    std::fs::read_to_string(path).data(|| format!("cannot read {}", path.display()))
}

pub fn run(ctx: &Context, settings: &mut Settings, args: &ExtractArgs) -> Outcome<()> {
    let data = settings.required_input("data", args.data.clone())?;
    let lexicon = match settings.input("lexicon", args.lexicon.clone())? {
        Some(p) => parse_dictionary(&read(&p)?).data(|| format!("dictionary {}", p.display()))?,
        None => {
            log::info!("no --lexicon given; using the bundled demo dictionary");
            Lexicon::demo()
        }
    };
    let pos = match settings.input("pos", args.pos.clone())? {
        Some(p) => PosLexicon::parse(&read(&p)?).data(|| format!("part-of-speech file {}", p.display()))?,
        None => PosLexicon::default(),
    };
    let schema = match settings.input("schema", args.schema.clone())? {
        Some(p) => FeatureSchema::parse(&read(&p)?).data(|| format!("schema {}", p.display()))?,
        None => FeatureSchema::default(),
    };
    let skip_bad = settings.flag("skip-bad", args.skip_bad)?;
    let output = settings.value("output", args.output.clone(), "features.csv".to_string())?;

    let records = dataset(&data)?;
    let extractor = Extractor::new(lexicon, pos, schema);
    let mut out = Artifacts::create(&ctx.out_dir)?;
    let table = if skip_bad {
        let (table, skipped) = extractor.extract_dataset_skipping(&records);
        for s in &skipped {
            log::warn!("skipped `{}`: {}", s.id, s.error);
        }
        if table.is_empty() {
            return Err(Failure::data(format!("all {} records failed feature extraction", records.len())));
        }
        out.write_csv("skipped.csv", |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["id", "error"])?;
            for s in &skipped {
                w.write_record([s.id.clone(), s.error.to_string()])?;
            }
            w.flush()?;
            Ok(())
        })?;
        table
    } else {
        extractor
            .extract_dataset(&records)
            .data(|| "feature extraction failed (use --skip-bad to continue past bad records)".to_string())?
    };
    out.write_csv(&output, |buf| table.write_csv(buf))?;
    out.finish(settings)?;
    Ok(())
}
