use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stconv_core::dataset::Split;
use stconv_core::Variant;

#[derive(Debug, Parser)]
#[command(
    name = "stconv",
    version,
    about = "Small-footprint keyword spotting on Speech Commands V1"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write the best dev checkpoint and the epoch log.
    Train(TrainArgs),
    /// Score checkpoints on dataset splits, dump posteriors and curves.
    Eval(EvalArgs),
    /// Classify WAV files.
    Infer(InferArgs),
    /// Print per-layer parameter and multiplier counts.
    Footprint(FootprintArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Base,
    Narrow,
    Avg,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Base => Variant::Base,
            VariantArg::Narrow => Variant::Narrow,
            VariantArg::Avg => Variant::Avg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Dev,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Dev => Split::Dev,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Extracted Speech Commands V1 root (word directories plus split lists).
    #[arg(long)]
    pub data: PathBuf,
    /// Directory for cached MFCC features.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Only use these words (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub words: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Output directory for `best.stw`, `last.stw` and `train_log.tsv`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = VariantArg::Base)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 80)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// One checkpoint per training run; two or more also report a 95% interval.
    #[arg(long, required = true, num_args = 1..)]
    pub checkpoint: Vec<PathBuf>,
    /// Directory for posterior dumps and curves.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "test")]
    pub splits: Vec<SplitArg>,
    /// Also write false-alarm / false-reject curves and their areas.
    #[arg(long)]
    pub roc: bool,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// 16 kHz mono 16-bit PCM WAV files.
    #[arg(required = true)]
    pub wavs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FootprintArgs {
    #[arg(long, value_enum, default_value_t = VariantArg::Base)]
    pub variant: VariantArg,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}
