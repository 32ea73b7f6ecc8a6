use std::collections::{HashMap, HashSet};
use std::path::Path;

use anyhow::{bail, Context};
use qalign_core::compile::DatasetManifest;
use qalign_core::metrics::{correlations, PairedSeries};
use serde::Serialize;

use crate::args::EvalArgs;
use crate::io::{output, read_scores, write_line, ScoreRecord};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetReport {
    pub dataset: String,
    pub count: usize,
    pub srcc: f64,
    pub plcc: f64,
    pub composite: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub predictions: String,
    pub datasets: Vec<DatasetReport>,
}

impl EvalReport {
    pub fn table(&self) -> String {
        let width = self.datasets.iter().map(|d| d.dataset.len()).max().unwrap_or(0).max("dataset".len());
        let mut s = format!("{:<width$}  {:>6}  {:>7}  {:>7}  {:>9}\n", "dataset", "items", "SRCC", "PLCC", "composite");
        for d in &self.datasets {
            s.push_str(&format!(
                "{:<width$}  {:>6}  {:>7.4}  {:>7.4}  {:>9.4}\n",
                d.dataset, d.count, d.srcc, d.plcc, d.composite
            ));
        }
        s
    }
}

/// (id in the labels file, id with the dataset prefix used by mixed runs, label)
pub type LabelRows = Vec<(String, String, f64)>;

struct LabelSet {
    name: String,
    rows: LabelRows,
}

fn read_labels(path: &Path) -> anyhow::Result<LabelSet> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let stem = path.file_stem().map_or_else(|| "labels".to_owned(), |s| s.to_string_lossy().into_owned());
    if let Ok(manifest) = DatasetManifest::parse(&text) {
        let rows = manifest
            .items
            .iter()
            .map(|item| (item.id.clone(), format!("{}/{}", manifest.name, item.id), item.mos))
            .collect();
        return Ok(LabelSet { name: manifest.name, rows });
    }
    let rows = crate::io::parse_scores(&text)
        .with_context(|| format!("{} is neither a manifest nor a score file", path.display()))?
        .into_iter()
        .map(|r| (r.id.clone(), format!("{stem}/{}", r.id), r.score))
        .collect();
    Ok(LabelSet { name: stem, rows })
}

/// Correlates predictions with each label set. Every label needs a prediction and
/// every prediction must match some label, by plain or dataset-prefixed id.
pub fn evaluate(predictions: &[ScoreRecord], labels: &[(String, LabelRows)]) -> anyhow::Result<Vec<DatasetReport>> {
    let by_id: HashMap<&str, f64> = predictions.iter().map(|r| (r.id.as_str(), r.score)).collect();
    let mut used = HashSet::new();
    let mut reports = Vec::new();
    for (name, rows) in labels {
        let mut preds = Vec::with_capacity(rows.len());
        let mut truth = Vec::with_capacity(rows.len());
        let mut missing = Vec::new();
        for (id, prefixed, label) in rows {
            let hit = [id.as_str(), prefixed.as_str()]
                .into_iter()
                .find_map(|key| by_id.get(key).map(|&score| (key, score)));
            match hit {
                Some((key, score)) => {
                    used.insert(key.to_owned());
                    preds.push(score);
                    truth.push(*label);
                }
                None => missing.push(id.as_str()),
            }
        }
        if !missing.is_empty() {
            bail!("{name}: {} labels have no prediction (first: {:?})", missing.len(), missing[0]);
        }
        let count = preds.len();
        let c = correlations(&PairedSeries::new(preds, truth)?).with_context(|| format!("dataset {name}"))?;
        reports.push(DatasetReport { dataset: name.clone(), count, srcc: c.srcc, plcc: c.plcc, composite: c.composite });
    }
    let unmatched: Vec<&str> = predictions.iter().map(|r| r.id.as_str()).filter(|id| !used.contains(*id)).collect();
    if !unmatched.is_empty() {
        bail!("{} predictions match no label (first: {:?})", unmatched.len(), unmatched[0]);
    }
    Ok(reports)
}

pub fn run(args: &EvalArgs) -> anyhow::Result<EvalReport> {
    let predictions = read_scores(&args.predictions)?;
    let label_sets = args
        .labels
        .iter()
        .map(|p| read_labels(p).map(|set| (set.name, set.rows)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let report = EvalReport {
        predictions: args.predictions.display().to_string(),
        datasets: evaluate(&predictions, &label_sets)?,
    };

    print!("{}", report.table());
    let mut out = output(args.out.as_deref())?;
    write_line(&mut out, &report)?;
    out.flush()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preds(values: &[(&str, f64)]) -> Vec<ScoreRecord> {
        values.iter().map(|&(id, score)| ScoreRecord { id: id.into(), score }).collect()
    }

    fn labels(name: &str, values: &[(&str, f64)]) -> (String, LabelRows) {
        let rows = values.iter().map(|&(id, v)| (id.to_owned(), format!("{name}/{id}"), v)).collect();
        (name.to_owned(), rows)
    }

    #[test]
    fn matches_plain_and_prefixed_ids() {
        let p = preds(&[("a", 1.0), ("k/b", 2.0), ("c", 3.5)]);
        let l = labels("k", &[("a", 10.0), ("b", 20.0), ("c", 30.0)]);
        let r = evaluate(&p, &[l]).unwrap();
        assert_eq!(r[0].count, 3);
        assert!((r[0].srcc - 1.0).abs() < 1e-12);
    }

    #[test]
    fn id_mismatches_fail() {
        let l = labels("k", &[("a", 1.0), ("b", 2.0), ("c", 3.0)]);
        assert!(evaluate(&preds(&[("a", 1.0), ("b", 2.0)]), std::slice::from_ref(&l)).is_err());
        let extra = preds(&[("a", 1.0), ("b", 2.0), ("c", 3.0), ("d", 4.0)]);
        assert!(evaluate(&extra, &[l]).is_err());
    }

    #[test]
    fn table_is_aligned() {
        let report = EvalReport {
            predictions: "p".into(),
            datasets: vec![DatasetReport { dataset: "koniq".into(), count: 3, srcc: 1.0, plcc: 0.5, composite: 0.75 }],
        };
        let table = report.table();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0].len(), lines[1].len());
        assert!(lines[1].contains("0.7500"));
    }
}
