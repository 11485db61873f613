use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "mmhash", version, about = "Noise-robust multi-modal hashing pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Generate a synthetic multi-label dataset.
    Synth(SynthArgs),
    /// Corrupt a fraction of labels and write the ground-truth mask.
    Inject(InjectArgs),
    /// Warm up and train a model, writing a checkpoint.
    Train(TrainArgs),
    /// Hash a retrieval and a test set and compute MAP, P@N and PR.
    Eval(EvalArgs),
    /// Train and evaluate one model per grid value and seed.
    Sweep(SweepArgs),
    /// Export in-category versus out-of-category score statistics.
    Boxplot(BoxplotArgs),
    /// Print the header of any file this tool writes.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitArg {
    Train,
    Retrieval,
    Test,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 64)]
    pub dx: usize,
    #[arg(long, default_value_t = 32)]
    pub dy: usize,
    #[arg(long, default_value_t = 1)]
    pub labels_min: usize,
    #[arg(long, default_value_t = 3)]
    pub labels_max: usize,
    #[arg(long, default_value_t = 0.2)]
    pub spread: f64,
    #[arg(long, value_enum, default_value_t = SplitArg::Train)]
    pub split: SplitArg,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a CSV export for inspection.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct InjectArgs {
    #[arg(long)]
    pub tau: f64,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub mask: PathBuf,
    /// Defaults to the seed stored in the input dataset.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Training flags. Each one, when given, overrides the config file field.
#[derive(Debug, Args, Serialize, Default)]
pub struct TrainOverrides {
    /// JSON file with TrainConfig fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub warmup_epochs: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// full, i, r, u or ru.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub code_len: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub fusion: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// batch or global.
    #[arg(long)]
    pub filter_scope: Option<String>,
    /// Keep up to this many earlier clean rows per epoch as extra donors.
    #[arg(long)]
    pub donor_cache: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub cfg: TrainOverrides,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Ground-truth mask; used only for filter diagnostics in the report.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Per-epoch CSV report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Full JSON report.
    #[arg(long)]
    pub report_json: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub retrieval: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// P@N cutoffs, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub pn: Vec<usize>,
    /// PR points at these rank cutoffs instead of every Hamming radius.
    #[arg(long, value_delimiter = ',')]
    pub pr_ranks: Vec<usize>,
    /// Per-query AP CSV.
    #[arg(long)]
    pub ap_out: Option<PathBuf>,
    #[arg(long)]
    pub pn_out: Option<PathBuf>,
    #[arg(long)]
    pub pr_out: Option<PathBuf>,
    /// Write the packed retrieval-set index.
    #[arg(long)]
    pub index_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Tau,
    Alpha,
    Beta,
    Gamma,
    Eta,
    Variant,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub cfg: TrainOverrides,
    /// Clean training set; each cell injects its own noise.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub retrieval: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BoxplotArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Splits rows into clean and noisy groups.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Score binary codes instead of relaxed codes.
    #[arg(long)]
    pub binary: bool,
    /// JSON table output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct InspectArgs {
    pub file: PathBuf,
}
