use anyhow::bail;
use qalign_core::compile::{plan_frames, FramePlan, TaskKind};
use serde::Serialize;

use crate::args::BudgetArgs;
use crate::io::{output, read_manifest, write_line};
use crate::Outcome;

#[derive(Debug, Serialize)]
struct BudgetRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    duration: f64,
    #[serde(flatten)]
    plan: FramePlan,
}

/// Fails (exit 1) when any clip does not fit the context.
pub fn run(args: &BudgetArgs) -> anyhow::Result<Outcome> {
    let mut clips: Vec<(Option<String>, f64)> = args.durations.iter().map(|&d| (None, d)).collect();
    for path in &args.manifests {
        let manifest = read_manifest(path, false)?;
        for item in &manifest.items {
            if manifest.task_of(item) != TaskKind::Vqa {
                continue;
            }
            match item.duration_seconds {
                Some(d) => clips.push((Some(item.id.clone()), d)),
                None => bail!("item {}: video item has no duration", item.id),
            }
        }
    }
    if clips.is_empty() {
        bail!("nothing to plan: pass --duration or a manifest with video items");
    }

    let mut out = output(args.out.as_deref())?;
    let mut outcome = Outcome::default();
    for (id, duration) in clips {
        let plan = plan_frames(duration, args.context_limit)?;
        if plan.fits_context {
            outcome.ok += 1;
        } else {
            outcome.failed += 1;
        }
        write_line(&mut out, &BudgetRecord { id, duration, plan })?;
    }
    out.flush()?;
    Ok(outcome)
}
