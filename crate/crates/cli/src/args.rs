use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "cofusion", version, about = "Graph-masked multi-modal survival and grade modelling")]
pub struct Cli {
    /// Seed for every random stream of the command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Log progress to stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort and gene graph.
    Synth(SynthArgs),
    /// Generate randomized train/test split repetitions.
    Splits(SplitsArgs),
    /// Train one variant on one repetition (or all of them).
    Train(TrainArgs),
    /// Evaluate a trained model or a risk file on a test side.
    Eval(EvalArgs),
    /// Kaplan-Meier curves of the low/mid/high risk tertiles.
    Km(KmArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub patients: usize,
    #[arg(long)]
    pub genes: usize,
    #[arg(long, default_value_t = 20)]
    pub causal: usize,
    /// Expected censored fraction.
    #[arg(long, default_value_t = 0.3)]
    pub censor: f64,
    /// Probability that a grade label is replaced by another class.
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 1)]
    pub samples_per_patient: usize,
    #[arg(long, default_value_t = 1000)]
    pub image_dim: usize,
    /// Also write the planted risk of every sample to `true_risk.csv`.
    #[arg(long)]
    pub write_risk: bool,
}

#[derive(Debug, Args)]
pub struct SplitsArgs {
    #[arg(long)]
    pub clinical: PathBuf,
    #[arg(long, default_value_t = 15)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.8)]
    pub train_frac: f64,
    /// `patient` or `sample`.
    #[arg(long, default_value = "patient")]
    pub group: String,
}

#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub rep: Option<usize>,
    /// Train every repetition into `rep_XX/` and write an aggregate.
    #[arg(long)]
    pub all_reps: bool,
    /// `fused`, `gene-only` or `image-only`.
    #[arg(long)]
    pub variant: Option<String>,
    /// `alternate`, `joint-add`, `survival-only` or `grade-only`.
    #[arg(long)]
    pub schedule: Option<String>,
    /// `mmmt-default`, `smst-image` or `smst-gene`.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Share of the training side held out for best-model selection.
    #[arg(long)]
    pub validation_frac: Option<f64>,
    /// Directory holding expression.csv, embedding.csv and clinical.csv.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub expression: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub clinical: Option<PathBuf>,
    #[arg(long)]
    pub edge_list: Option<PathBuf>,
    #[arg(long)]
    pub splits: Option<PathBuf>,
    /// `sample` or `patient` pooling of the test metrics.
    #[arg(long)]
    pub aggregation: Option<String>,
    /// `half` or `strict` scoring of tied risks.
    #[arg(long)]
    pub ties: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Output directory of a `train` run.
    #[arg(long, conflicts_with = "risks")]
    pub model: Option<PathBuf>,
    /// CSV `sample_id,risk` evaluated directly instead of a model.
    #[arg(long)]
    pub risks: Option<PathBuf>,
    /// Clinical table (defaults to the model's run configuration).
    #[arg(long)]
    pub clinical: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long)]
    pub rep: Option<usize>,
    /// `all`, `survival` or `grade`.
    #[arg(long, default_value = "all")]
    pub metrics: String,
    /// `sample` or `patient` (defaults to the model's run configuration).
    #[arg(long)]
    pub aggregation: Option<String>,
    /// `half` or `strict` scoring of tied risks.
    #[arg(long)]
    pub ties: Option<String>,
}

#[derive(Debug, Args)]
pub struct KmArgs {
    #[arg(long)]
    pub risks: PathBuf,
    #[arg(long)]
    pub clinical: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}
