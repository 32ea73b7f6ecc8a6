use std::collections::HashMap;

use anyhow::{bail, ensure};

use crate::args::EnsembleArgs;
use crate::io::{output, read_scores, write_line, ScoreRecord};
use crate::Outcome;

fn standardize(values: &[f64], name: &str) -> anyhow::Result<Vec<f64>> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var.is_nan() || var <= 0.0 {
        bail!("{name} scores have zero variance");
    }
    let sd = var.sqrt();
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}

/// `w · z(A) + (1 - w) · z(B)` per id, in the order of `a`.
pub fn fuse(a: &[ScoreRecord], b: &[ScoreRecord], weight: f64) -> anyhow::Result<Vec<ScoreRecord>> {
    ensure!((0.0..=1.0).contains(&weight), "weight {weight} must lie in [0, 1]");
    ensure!(!a.is_empty(), "score files are empty");
    let b_by_id: HashMap<&str, f64> = b.iter().map(|r| (r.id.as_str(), r.score)).collect();
    ensure!(a.len() == b.len(), "score files hold {} and {} ids", a.len(), b.len());
    let b_aligned = a
        .iter()
        .map(|r| b_by_id.get(r.id.as_str()).copied().ok_or_else(|| anyhow::anyhow!("id {:?} missing from B", r.id)))
        .collect::<anyhow::Result<Vec<f64>>>()?;
    let za = standardize(&a.iter().map(|r| r.score).collect::<Vec<_>>(), "A")?;
    let zb = standardize(&b_aligned, "B")?;
    Ok(a
        .iter()
        .zip(za.iter().zip(&zb))
        .map(|(r, (x, y))| ScoreRecord { id: r.id.clone(), score: weight * x + (1.0 - weight) * y })
        .collect())
}

pub fn run(args: &EnsembleArgs) -> anyhow::Result<Outcome> {
    let fused = fuse(&read_scores(&args.a)?, &read_scores(&args.b)?, args.weight)?;
    let mut out = output(args.out.as_deref())?;
    for record in &fused {
        write_line(&mut out, record)?;
    }
    out.flush()?;
    Ok(Outcome { ok: fused.len(), ..Outcome::default() })
}
