#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Parser;
use qalign_cli::{run, Cli, Outcome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Published example logit rows as a replay file.
pub const TABLE_REPLAY: &str = r#"{"id":"A-iqa","logits":{"excellent":18.03,"good":18.38,"fair":14.63,"poor":11.60,"bad":9.477}}
{"id":"B-iqa","logits":{"excellent":8.953,"good":11.37,"fair":15.31,"poor":18.06,"bad":16.59}}
{"id":"A-iaa","logits":{"excellent":16.63,"good":18.17,"fair":15.77,"poor":12.13,"bad":10.77}}
{"id":"B-iaa","logits":{"excellent":9.594,"good":13.13,"fair":16.95,"poor":17.67,"bad":14.91}}
"#;

pub fn cli(args: &[&str]) -> anyhow::Result<Outcome> {
    let argv = std::iter::once("qalign").chain(args.iter().copied());
    run(Cli::try_parse_from(argv)?)
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

pub fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

/// JSONL manifest of `n` image items with distinct scores drawn from `[min, max]`.
pub fn synthetic_manifest(name: &str, task: &str, n: usize, min: f64, max: f64, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = format!(r#"{{"name":"{name}","task":"{task}","range":{{"min":{min},"max":{max}}}}}"#);
    text.push('\n');
    for i in 0..n {
        let mos: f64 = rng.gen_range(min..=max);
        let duration = if task == "vqa" { format!(r#","duration":{}"#, rng.gen_range(1.0..30.0)) } else { String::new() };
        writeln!(text, r#"{{"id":"{name}-{i:05}","media_uri":"media/{name}/{i}.jpg","mos":{mos}{duration}}}"#).unwrap();
    }
    text
}

pub fn lines(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}
