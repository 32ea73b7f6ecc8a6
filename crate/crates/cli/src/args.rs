use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qalign_core::compile::DEFAULT_CONTEXT_LIMIT;
use qalign_core::provider::ENDPOINT_ENV;
use qalign_core::sim::RaterMode;

#[derive(Debug, Parser)]
#[command(name = "qalign", version, about = "Rating-level toolkit for visual scoring with multimodal LMs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile scored manifests into chat-format training records.
    Compile(CompileArgs),
    /// Turn level logits into scores.
    Decode(DecodeArgs),
    /// Correlate predictions with labels (SRCC, PLCC and their mean).
    Eval(EvalArgs),
    /// Simulate rating panels and their mean opinion scores.
    Simulate(SimulateArgs),
    /// Plan 1 fps frame sampling and check it against the context budget.
    Budget(BudgetArgs),
    /// Fuse two score files by weighted z-scores.
    Ensemble(EnsembleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ManifestArgs {
    /// Dataset manifest (JSONL or CSV/TSV). Repeat for several.
    #[arg(long = "manifest", required = true)]
    pub manifests: Vec<PathBuf>,
    /// Concatenate several manifests, prefixing ids with the dataset name.
    #[arg(long)]
    pub mix: bool,
    /// Use observed min/max of each manifest instead of its declared range.
    #[arg(long)]
    pub empirical_range: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CompileArgs {
    #[command(flatten)]
    pub input: ManifestArgs,
    /// Keep only this fraction of each manifest, sampled with --seed.
    #[arg(long)]
    pub fewshot: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Drop failing items instead of failing the run.
    #[arg(long)]
    pub skip_bad: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderKind {
    Replay,
    Remote,
    Mock,
}

#[derive(Debug, Clone, Args)]
pub struct DecodeArgs {
    #[arg(long, value_enum)]
    pub provider: ProviderKind,
    /// Items to decode. Without it, a replay file is decoded in file order.
    #[arg(long = "manifest")]
    pub manifests: Vec<PathBuf>,
    #[arg(long)]
    pub mix: bool,
    /// Replay file of recorded logits.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Remote provider URL.
    #[arg(long, env = ENDPOINT_ENV)]
    pub endpoint: Option<String>,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 30.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = 4)]
    pub max_inflight: usize,
    #[arg(long, default_value_t = 2)]
    pub retries: u32,
    /// Logit noise of the mock provider.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub skip_bad: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Score file of predictions (`{"id", "score"}` per line).
    #[arg(long)]
    pub predictions: PathBuf,
    /// Labels: a manifest or a score file. One report row per file.
    #[arg(long = "labels", required = true)]
    pub labels: Vec<PathBuf>,
    /// Machine-readable report path; printed after the table when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 20)]
    pub raters: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Type1)]
    pub mode: ModeArg,
    #[arg(long)]
    pub true_score: f64,
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of panels; panel k uses seed + k.
    #[arg(long, default_value_t = 1)]
    pub panels: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Type1,
    Type2,
}

impl From<ModeArg> for RaterMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Type1 => RaterMode::Type1,
            ModeArg::Type2 => RaterMode::Type2,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BudgetArgs {
    /// Clip duration in seconds. Repeatable.
    #[arg(long = "duration")]
    pub durations: Vec<f64>,
    /// Plan every video item of these manifests.
    #[arg(long = "manifest")]
    pub manifests: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CONTEXT_LIMIT)]
    pub context_limit: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EnsembleArgs {
    /// First score file.
    pub a: PathBuf,
    /// Second score file.
    pub b: PathBuf,
    /// Weight of the first file after standardization.
    #[arg(long, default_value_t = 0.5)]
    pub weight: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
