use std::collections::HashMap;
use std::time::Duration;

use anyhow::{bail, Context};
use qalign_core::compile::{plan_frames, DatasetManifest, TaskKind, DEFAULT_CONTEXT_LIMIT, IMAGE_TOKEN};
use qalign_core::decode::{decode, rescale_score};
use qalign_core::provider::{fetch_logits, read_replay, LogitRequest, ProviderConfig, RemoteConfig};
use qalign_core::wire::NamedLevels;
use qalign_core::{DecodedScore, LevelScale, RatingLevel, ScoreRange};
use serde::Serialize;

use crate::args::{DecodeArgs, ManifestArgs, ProviderKind};
use crate::io::{load_manifests, output, write_line};
use crate::Outcome;

/// One line of decode output.
#[derive(Debug, Serialize)]
pub struct DecodeRecord {
    pub id: String,
    /// Expected score on the canonical `[1, 5]` scale.
    pub score: f64,
    /// The same score mapped onto the item's dataset range.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub native_score: Option<f64>,
    pub probabilities: NamedLevels<f64>,
    pub top: RatingLevel,
    pub second: RatingLevel,
    pub adjacent: bool,
}

impl DecodeRecord {
    pub fn new(id: String, decoded: &DecodedScore, native_range: Option<ScoreRange>) -> Self {
        Self {
            id,
            score: decoded.score,
            native_score: native_range
                .map(|r| rescale_score(decoded.score, &ScoreRange::canonical(), &r).expect("score on canonical scale")),
            probabilities: NamedLevels::from_ascending(*decoded.probabilities.values()),
            top: decoded.top,
            second: decoded.second,
            adjacent: decoded.adjacent(),
        }
    }
}

/// The request sent for an item at inference time: the exemplar query of its task.
pub fn inference_request(manifest: &DatasetManifest, index: usize) -> anyhow::Result<LogitRequest> {
    let item = &manifest.items[index];
    let task = manifest.task_of(item);
    let media = match task {
        TaskKind::Iqa | TaskKind::Iaa => vec![item.media_uri.clone()],
        TaskKind::Vqa => {
            let duration = item.duration_seconds.with_context(|| format!("item {}: no duration", item.id))?;
            plan_frames(duration, DEFAULT_CONTEXT_LIMIT)?
                .timestamps
                .iter()
                .map(|t| format!("{}#t={t}", item.media_uri))
                .collect()
        }
    };
    Ok(LogitRequest {
        id: item.id.clone(),
        prompt: format!("{}{}", IMAGE_TOKEN.repeat(media.len()), task.paraphrases()[0]),
        media,
    })
}

fn provider_config(args: &DecodeArgs, manifest: Option<&DatasetManifest>) -> anyhow::Result<ProviderConfig> {
    Ok(match args.provider {
        ProviderKind::Replay => ProviderConfig::Replay {
            path: args.replay.clone().context("--replay is required for the replay provider")?,
        },
        ProviderKind::Remote => {
            if !(args.timeout.is_finite() && args.timeout > 0.0) {
                bail!("--timeout must be positive");
            }
            ProviderConfig::Remote(RemoteConfig {
                timeout: Duration::from_secs_f64(args.timeout),
                max_inflight: args.max_inflight,
                retries: args.retries,
                ..RemoteConfig::from_env_or(args.endpoint.clone())?
            })
        }
        ProviderKind::Mock => {
            let manifest = manifest.context("the mock provider needs --manifest for its target scores")?;
            let canonical = ScoreRange::canonical();
            let mut targets = HashMap::new();
            for item in &manifest.items {
                let range = manifest.range_of(item);
                if let Ok(target) = rescale_score(item.mos, &range, &canonical) {
                    targets.insert(item.id.clone(), target);
                }
            }
            ProviderConfig::Mock { noise_scale: args.noise, seed: args.seed, targets }
        }
    })
}

pub fn run(args: &DecodeArgs) -> anyhow::Result<Outcome> {
    let scale = LevelScale::canonical();
    let mut out = output(args.out.as_deref())?;
    let mut outcome = Outcome { skip_bad: args.skip_bad, ..Outcome::default() };

    if args.manifests.is_empty() {
        if args.provider != ProviderKind::Replay {
            bail!("--manifest is required unless decoding a replay file");
        }
        let path = args.replay.as_ref().context("--replay is required for the replay provider")?;
        for row in read_replay(path)? {
            write_line(&mut out, &DecodeRecord::new(row.id, &decode(&row.logits, &scale), None))?;
            outcome.ok += 1;
        }
        out.flush()?;
        return Ok(outcome);
    }

    let manifest_args = ManifestArgs { manifests: args.manifests.clone(), mix: args.mix, empirical_range: false };
    let manifest = load_manifests(&manifest_args, Ok)?;
    let config = provider_config(args, Some(&manifest))?;

    let mut requests = Vec::with_capacity(manifest.len());
    let mut ranges = Vec::with_capacity(manifest.len());
    for (i, item) in manifest.items.iter().enumerate() {
        match inference_request(&manifest, i) {
            Ok(request) => {
                requests.push(request);
                ranges.push(manifest.range_of(item));
            }
            Err(err) => {
                eprintln!("{err:#}");
                outcome.failed += 1;
            }
        }
    }

    let responses = fetch_logits(&config, &requests)?;
    let mut records = Vec::with_capacity(responses.len());
    for (response, range) in responses.into_iter().zip(ranges) {
        match response {
            Ok(r) => {
                records.push(DecodeRecord::new(r.id, &decode(&r.logits, &scale), Some(range)));
                outcome.ok += 1;
            }
            Err(err) => {
                eprintln!("{err}");
                outcome.failed += 1;
            }
        }
    }
    if outcome.success() {
        for record in &records {
            write_line(&mut out, record)?;
        }
    }
    out.flush()?;
    Ok(outcome)
}
