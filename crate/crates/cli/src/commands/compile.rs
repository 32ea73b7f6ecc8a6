use std::collections::BTreeMap;

use qalign_core::compile::{compile_pairs, subsample_fewshot};

use crate::args::CompileArgs;
use crate::io::{load_manifests, output, write_line};
use crate::Outcome;

pub fn run(args: &CompileArgs) -> anyhow::Result<Outcome> {
    let manifest = load_manifests(&args.input, |m| match args.fewshot {
        Some(fraction) => Ok(subsample_fewshot(&m, fraction, args.seed)?),
        None => Ok(m),
    })?;

    let results = compile_pairs(&manifest, args.seed);
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (item, result) in manifest.items.iter().zip(&results) {
        let entry = counts.entry(manifest.source_of(item).to_owned()).or_default();
        match result {
            Ok(_) => entry.0 += 1,
            Err(err) => {
                entry.1 += 1;
                eprintln!("{err}");
            }
        }
    }
    for (source, (ok, failed)) in &counts {
        eprintln!("{source}: {ok} pairs, {failed} errors");
    }

    let outcome = Outcome {
        ok: results.iter().filter(|r| r.is_ok()).count(),
        failed: results.iter().filter(|r| r.is_err()).count(),
        skip_bad: args.skip_bad,
    };
    if outcome.success() {
        let mut out = output(args.out.as_deref())?;
        for pair in results.iter().flatten() {
            write_line(&mut out, &pair.to_record())?;
        }
        out.flush()?;
    }
    Ok(outcome)
}
