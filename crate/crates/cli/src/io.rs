use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context};
use qalign_core::compile::{mix_datasets, DatasetManifest};
use serde::{Deserialize, Serialize};

use crate::args::ManifestArgs;

/// One `{"id", "score"}` line; other fields are ignored on read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub id: String,
    pub score: f64,
}

pub fn read_scores(path: &Path) -> anyhow::Result<Vec<ScoreRecord>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_scores(&text).with_context(|| format!("in {}", path.display()))
}

pub(crate) fn parse_scores(text: &str) -> anyhow::Result<Vec<ScoreRecord>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ScoreRecord = serde_json::from_str(line).with_context(|| format!("line {}", i + 1))?;
        if !record.score.is_finite() {
            bail!("line {}: non-finite score", i + 1);
        }
        if !seen.insert(record.id.clone()) {
            bail!("line {}: duplicate id {:?}", i + 1, record.id);
        }
        out.push(record);
    }
    Ok(out)
}

pub(crate) fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub(crate) fn write_line<T: Serialize>(out: &mut dyn Write, value: &T) -> anyhow::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub(crate) fn read_manifest(path: &Path, empirical: bool) -> anyhow::Result<DatasetManifest> {
    let manifest = DatasetManifest::read(path).with_context(|| format!("reading manifest {}", path.display()))?;
    Ok(if empirical { manifest.with_empirical_range()? } else { manifest })
}

/// Loads the manifests and applies `transform` to each before mixing.
pub(crate) fn load_manifests(
    args: &ManifestArgs,
    mut transform: impl FnMut(DatasetManifest) -> anyhow::Result<DatasetManifest>,
) -> anyhow::Result<DatasetManifest> {
    let manifests = args
        .manifests
        .iter()
        .map(|p| read_manifest(p, args.empirical_range).and_then(&mut transform))
        .collect::<anyhow::Result<Vec<_>>>()?;
    match manifests.len() {
        0 => bail!("no manifest given"),
        1 if !args.mix => Ok(manifests.into_iter().next().expect("one manifest")),
        _ if args.mix => Ok(mix_datasets(&manifests)?),
        n => bail!("{n} manifests given; pass --mix to combine them"),
    }
}
