//! Compiles MOS-annotated manifests into two-turn chat training samples.
//!
//! Each item's MOS is converted to a rating level with the equidistant
//! partition of its dataset's range. The user turn is one image token per
//! media slot followed by a query drawn from the task's paraphrase pool; the
//! assistant turn states the level and is the only supervised text.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::level::{score_to_level, RatingLevel, ScoreRange};

/// Visual tokens produced per image by the visual abstractor.
pub const TOKENS_PER_IMAGE: usize = 64;
/// Largest number of images that fit the language model's context.
pub const MAX_IMAGES: usize = 30;
/// Context length of the language model.
pub const DEFAULT_CONTEXT_LIMIT: usize = 2048;
/// Context tokens reserved for conversation text.
pub const TEXT_TOKEN_ALLOWANCE: usize = 128;
/// Placeholder for one image in the user turn.
pub const IMAGE_TOKEN: &str = "<|image|>";

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("item {id}: mos {mos} outside [{min}, {max}]")]
    OutOfRange { id: String, mos: f64, min: f64, max: f64 },
    #[error("item {id}: video item has no duration")]
    MissingDuration { id: String },
    #[error("item {id}: {frames} frames exceed the context budget")]
    ExceedsContext { id: String, frames: usize },
    #[error("item {id}: {message}")]
    InvalidItem { id: String, message: String },
    #[error("duplicate item id {0:?}")]
    DuplicateId(String),
    #[error("few-shot fraction {0} must lie in (0, 1]")]
    InvalidFraction(f64),
    #[error("duration {0} must be positive and finite")]
    InvalidDuration(f64),
    #[error("manifest {0:?} has no items")]
    EmptyManifest(String),
    #[error("no manifests to mix")]
    NothingToMix,
    #[error("manifest line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CompileError {
    fn parse(line: usize, message: impl fmt::Display) -> Self {
        CompileError::Parse { line, message: message.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Iqa,
    Iaa,
    Vqa,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Iqa, TaskKind::Iaa, TaskKind::Vqa];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Iqa => "iqa",
            TaskKind::Iaa => "iaa",
            TaskKind::Vqa => "vqa",
        }
    }

    fn response_prefix(self) -> &'static str {
        match self {
            TaskKind::Iqa => "The quality of the image is ",
            TaskKind::Iaa => "The aesthetics of the image is ",
            TaskKind::Vqa => "The quality of the video is ",
        }
    }

    /// Assistant response stating `level`.
    pub fn response(self, level: RatingLevel) -> String {
        format!("{}{}.", self.response_prefix(), level.label())
    }

    /// Recovers the level from a response produced by [`TaskKind::response`].
    pub fn parse_response(self, text: &str) -> Option<RatingLevel> {
        text.strip_prefix(self.response_prefix())?
            .strip_suffix('.')?
            .parse()
            .ok()
    }

    pub fn paraphrases(self) -> &'static [String] {
        let pool = paraphrase_pool();
        match self {
            TaskKind::Iqa => &pool.iqa,
            TaskKind::Iaa => &pool.iaa,
            TaskKind::Vqa => &pool.vqa,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "iqa" => Ok(TaskKind::Iqa),
            "iaa" => Ok(TaskKind::Iaa),
            "vqa" => Ok(TaskKind::Vqa),
            other => Err(format!("unknown task {other:?} (expected iqa, iaa or vqa)")),
        }
    }
}

#[derive(Debug, Deserialize)]
struct ParaphrasePool {
    version: u32,
    iqa: Vec<String>,
    iaa: Vec<String>,
    vqa: Vec<String>,
}

fn paraphrase_pool() -> &'static ParaphrasePool {
    static POOL: OnceLock<ParaphrasePool> = OnceLock::new();
    POOL.get_or_init(|| {
        serde_json::from_str(include_str!("../data/paraphrases.json")).expect("bundled paraphrase pool")
    })
}

/// Version tag of the bundled paraphrase pool.
pub fn paraphrase_pool_version() -> u32 {
    paraphrase_pool().version
}

/// Dataset, task and range an item came from, attached when manifests are mixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Origin {
    pub dataset: String,
    pub task: TaskKind,
    pub range: ScoreRange<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedItem {
    pub id: String,
    pub media_uri: String,
    pub mos: f64,
    #[serde(rename = "duration", default, skip_serializing_if = "Option::is_none")]
    pub duration_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Origin>,
}

impl AnnotatedItem {
    pub fn new(id: impl Into<String>, media_uri: impl Into<String>, mos: f64) -> Self {
        Self {
            id: id.into(),
            media_uri: media_uri.into(),
            mos,
            duration_seconds: None,
            origin: None,
        }
    }

    pub fn with_duration(mut self, seconds: f64) -> Self {
        self.duration_seconds = Some(seconds);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ManifestHeader {
    name: String,
    task: TaskKind,
    range: ScoreRange<f64>,
}

/// A named set of scored items sharing a task and a nominal score range.
///
/// Items carrying an [`Origin`] use the origin's task and range instead.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub task: TaskKind,
    pub range: ScoreRange<f64>,
    pub items: Vec<AnnotatedItem>,
}

impl DatasetManifest {
    pub fn new(
        name: impl Into<String>,
        task: TaskKind,
        range: ScoreRange<f64>,
        items: Vec<AnnotatedItem>,
    ) -> Result<Self, CompileError> {
        let name = name.into();
        if items.is_empty() {
            return Err(CompileError::EmptyManifest(name));
        }
        Ok(Self { name, task, range, items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn task_of(&self, item: &AnnotatedItem) -> TaskKind {
        item.origin.as_ref().map_or(self.task, |o| o.task)
    }

    pub fn range_of(&self, item: &AnnotatedItem) -> ScoreRange<f64> {
        item.origin.as_ref().map_or(self.range, |o| o.range)
    }

    pub fn source_of<'a>(&'a self, item: &'a AnnotatedItem) -> &'a str {
        item.origin.as_ref().map_or(&self.name, |o| &o.dataset)
    }

    /// Replaces the nominal range with the observed min/max of the item scores.
    pub fn with_empirical_range(mut self) -> Result<Self, CompileError> {
        self.range = ScoreRange::empirical(self.items.iter().map(|i| i.mos)).map_err(|e| {
            CompileError::InvalidItem { id: self.name.clone(), message: e.to_string() }
        })?;
        Ok(self)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, CompileError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses a line-delimited JSON manifest or a comma/tab separated one.
    pub fn parse(text: &str) -> Result<Self, CompileError> {
        let first = text.lines().map(str::trim).find(|l| !l.is_empty());
        match first {
            Some(line) if line.starts_with('{') => Self::parse_jsonl(text),
            Some(_) => Self::parse_tabular(text),
            None => Err(CompileError::parse(1, "empty manifest")),
        }
    }

    fn parse_jsonl(text: &str) -> Result<Self, CompileError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (n, header) = lines.next().ok_or_else(|| CompileError::parse(1, "missing header"))?;
        let header: ManifestHeader =
            serde_json::from_str(header).map_err(|e| CompileError::parse(n, format!("header: {e}")))?;
        let items = lines
            .map(|(n, line)| serde_json::from_str(line).map_err(|e| CompileError::parse(n, e)))
            .collect::<Result<Vec<AnnotatedItem>, _>>()?;
        Self::new(header.name, header.task, header.range, items)
    }

    fn parse_tabular(text: &str) -> Result<Self, CompileError> {
        let (mut name, mut task, mut range) = (None, None, None);
        let mut body_start = 0;
        let mut body_line = 1;
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                body_start += line.len() + 1;
                continue;
            }
            let Some(meta) = trimmed.strip_prefix('#') else {
                body_line = i + 1;
                break;
            };
            body_start += line.len() + 1;
            let (key, value) = meta
                .split_once('=')
                .ok_or_else(|| CompileError::parse(i + 1, "expected #key=value"))?;
            let value = value.trim();
            match key.trim() {
                "name" => name = Some(value.to_owned()),
                "task" => task = Some(value.parse::<TaskKind>().map_err(|e| CompileError::parse(i + 1, e))?),
                "range" => {
                    let (lo, hi) = value
                        .split_once(',')
                        .ok_or_else(|| CompileError::parse(i + 1, "range must be min,max"))?;
                    let lo: f64 = lo.trim().parse().map_err(|e| CompileError::parse(i + 1, e))?;
                    let hi: f64 = hi.trim().parse().map_err(|e| CompileError::parse(i + 1, e))?;
                    range = Some(ScoreRange::new(lo, hi).map_err(|e| CompileError::parse(i + 1, e))?);
                }
                other => return Err(CompileError::parse(i + 1, format!("unknown header key {other:?}"))),
            }
        }
        let name = name.ok_or_else(|| CompileError::parse(1, "missing #name"))?;
        let task = task.ok_or_else(|| CompileError::parse(1, "missing #task"))?;
        let range = range.ok_or_else(|| CompileError::parse(1, "missing #range"))?;

        let body = &text[body_start.min(text.len())..];
        let delimiter = if body.lines().next().is_some_and(|l| l.contains('\t')) { b'\t' } else { b',' };
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let mut items = Vec::new();
        for (i, record) in reader.deserialize::<TabularItem>().enumerate() {
            let line = body_line + 1 + i;
            let row = record.map_err(|e| CompileError::parse(line, e))?;
            items.push(AnnotatedItem {
                id: row.id,
                media_uri: row.media_uri,
                mos: row.mos,
                duration_seconds: row.duration,
                origin: None,
            });
        }
        Self::new(name, task, range, items)
    }

    /// Line-delimited JSON form accepted by [`DatasetManifest::parse`].
    pub fn to_jsonl(&self) -> String {
        let header = ManifestHeader { name: self.name.clone(), task: self.task, range: self.range };
        let mut out = serde_json::to_string(&header).expect("serializable header");
        out.push('\n');
        for item in &self.items {
            out.push_str(&serde_json::to_string(item).expect("serializable item"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Deserialize)]
struct TabularItem {
    id: String,
    media_uri: String,
    mos: f64,
    #[serde(default, deserialize_with = "csv::invalid_option")]
    duration: Option<f64>,
}

/// One media slot of a training sample. Video frames carry their timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaRef {
    pub uri: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<f64>,
}

/// A compiled user query and assistant answer for one item.
#[derive(Debug, Clone, PartialEq)]
pub struct InstructionPair {
    pub id: String,
    pub source: String,
    pub task: TaskKind,
    pub level: RatingLevel,
    pub media_refs: Vec<MediaRef>,
    pub user_text: String,
    pub assistant_text: String,
}

impl InstructionPair {
    /// The only text that receives a training loss.
    pub fn supervised_span(&self) -> &str {
        &self.assistant_text
    }

    pub fn to_record(&self) -> TrainingRecord {
        TrainingRecord {
            id: self.id.clone(),
            source: self.source.clone(),
            task: self.task,
            level: self.level,
            media: self.media_refs.clone(),
            conversations: vec![
                Turn { from: Speaker::Human, value: self.user_text.clone(), supervised: false },
                Turn { from: Speaker::Gpt, value: self.assistant_text.clone(), supervised: true },
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Human,
    Gpt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub from: Speaker,
    pub value: String,
    pub supervised: bool,
}

/// Serialized form of an [`InstructionPair`], one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub id: String,
    pub source: String,
    pub task: TaskKind,
    pub level: RatingLevel,
    pub media: Vec<MediaRef>,
    pub conversations: Vec<Turn>,
}

/// Compiles one pair per item, in manifest order.
///
/// Queries are drawn from a ChaCha8 stream seeded with `seed`, one draw per
/// item, so identical inputs give identical output.
pub fn compile_pairs(manifest: &DatasetManifest, seed: u64) -> Vec<Result<InstructionPair, CompileError>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    manifest
        .items
        .iter()
        .map(|item| {
            let task = manifest.task_of(item);
            let pool = task.paraphrases();
            let query = &pool[rng.gen_range(0..pool.len())];
            compile_item(manifest, item, task, query)
        })
        .collect()
}

fn compile_item(
    manifest: &DatasetManifest,
    item: &AnnotatedItem,
    task: TaskKind,
    query: &str,
) -> Result<InstructionPair, CompileError> {
    let range = manifest.range_of(item);
    let level = score_to_level(item.mos, &range).map_err(|_| CompileError::OutOfRange {
        id: item.id.clone(),
        mos: item.mos,
        min: range.min(),
        max: range.max(),
    })?;

    let media_refs = match task {
        TaskKind::Iqa | TaskKind::Iaa => vec![MediaRef { uri: item.media_uri.clone(), timestamp: None }],
        TaskKind::Vqa => {
            let duration = item
                .duration_seconds
                .ok_or_else(|| CompileError::MissingDuration { id: item.id.clone() })?;
            let plan = plan_frames(duration, DEFAULT_CONTEXT_LIMIT).map_err(|e| CompileError::InvalidItem {
                id: item.id.clone(),
                message: e.to_string(),
            })?;
            if !plan.fits_context {
                return Err(CompileError::ExceedsContext { id: item.id.clone(), frames: plan.frame_count });
            }
            plan.timestamps
                .iter()
                .map(|&t| MediaRef { uri: item.media_uri.clone(), timestamp: Some(t) })
                .collect()
        }
    };

    let user_text = format!("{}{}", IMAGE_TOKEN.repeat(media_refs.len()), query);
    Ok(InstructionPair {
        id: item.id.clone(),
        source: manifest.source_of(item).to_owned(),
        task,
        level,
        media_refs,
        user_text,
        assistant_text: task.response(level),
    })
}

/// Concatenates manifests, prefixing ids with `<dataset>/` and recording each item's origin.
pub fn mix_datasets(manifests: &[DatasetManifest]) -> Result<DatasetManifest, CompileError> {
    let first = manifests.first().ok_or(CompileError::NothingToMix)?;
    let mut seen = HashSet::new();
    let mut items = Vec::with_capacity(manifests.iter().map(DatasetManifest::len).sum());
    for manifest in manifests {
        for item in &manifest.items {
            let origin = item.origin.clone().unwrap_or_else(|| Origin {
                dataset: manifest.name.clone(),
                task: manifest.task,
                range: manifest.range,
            });
            let id = format!("{}/{}", manifest.name, item.id);
            if !seen.insert(id.clone()) {
                return Err(CompileError::DuplicateId(id));
            }
            items.push(AnnotatedItem { id, origin: Some(origin), ..item.clone() });
        }
    }
    let name = manifests.iter().map(|m| m.name.as_str()).collect::<Vec<_>>().join("+");
    DatasetManifest::new(name, first.task, first.range, items)
}

/// Number of items kept when sampling `fraction` of `total`.
pub fn fewshot_count(total: usize, fraction: f64) -> Result<usize, CompileError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CompileError::InvalidFraction(fraction));
    }
    let exact = fraction * total as f64;
    let nearest = exact.round();
    let count = if (exact - nearest).abs() <= 1e-9 * (total.max(1) as f64) { nearest } else { exact.ceil() };
    Ok((count as usize).max(1).min(total))
}

/// Uniform sample without replacement of `ceil(fraction · N)` items, kept in manifest order.
pub fn subsample_fewshot(manifest: &DatasetManifest, fraction: f64, seed: u64) -> Result<DatasetManifest, CompileError> {
    let count = fewshot_count(manifest.len(), fraction)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, manifest.len(), count).into_vec();
    picked.sort_unstable();
    let items = picked.into_iter().map(|i| manifest.items[i].clone()).collect();
    DatasetManifest::new(manifest.name.clone(), manifest.task, manifest.range, items)
}

/// Frames sampled at one per second and the context they occupy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePlan {
    pub timestamps: Vec<f64>,
    pub frame_count: usize,
    pub token_count: usize,
    pub fits_context: bool,
}

/// Plans 1 fps sampling of a clip: `max(1, floor(duration))` frames at 0, 1, 2, … seconds.
///
/// The plan fits when at most [`MAX_IMAGES`] frames are used and their visual
/// tokens leave [`TEXT_TOKEN_ALLOWANCE`] tokens of `context_limit` for text.
pub fn plan_frames(duration_seconds: f64, context_limit: usize) -> Result<FramePlan, CompileError> {
    if !(duration_seconds.is_finite() && duration_seconds > 0.0) {
        return Err(CompileError::InvalidDuration(duration_seconds));
    }
    let frame_count = (duration_seconds.floor() as usize).max(1);
    let token_count = TOKENS_PER_IMAGE * frame_count;
    let fits_context =
        frame_count <= MAX_IMAGES && token_count + TEXT_TOKEN_ALLOWANCE <= context_limit;
    Ok(FramePlan {
        timestamps: (0..frame_count).map(|i| i as f64).collect(),
        frame_count,
        token_count,
        fits_context,
    })
}
