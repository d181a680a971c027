use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "crossloss", version, about = "Cross-loss influence analysis for embeddings and clustering")]
pub struct Cli {
    /// TOML file with a top-level `seed` and one table per subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every randomized step. Required by randomized commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Log progress to standard error.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a labelled Gaussian mixture to CSV.
    MogGen(MogGenArgs),
    /// Write a synthetic corpus with planted target/attribute associations.
    PlantCorpus(PlantArgs),
    /// Cluster MOG points with k-means followed by DEC (or a supervised NLL fit).
    TrainDec(TrainDecArgs),
    /// Train skip-gram embeddings on a one-document-per-line corpus.
    TrainSg(TrainSgArgs),
    /// Score every training sample against a test objective.
    Influence(InfluenceArgs),
    /// Compare predicted influence with leave-one-out retraining on MOG data.
    LooAudit(LooAuditArgs),
    /// WEAT effect size of trained embeddings.
    Weat(WeatArgs),
    /// k-means over embeddings with silhouette model selection.
    Cluster(ClusterArgs),
    /// Fine-tune on influence sets to shrink (or with --mode overbias, grow) |WEAT|.
    Mitigate(MitigateArgs),
    /// `mitigate --mode overbias`.
    Overbias(MitigateArgs),
}

impl Command {
    pub fn section(&self) -> &'static str {
        match self {
            Command::MogGen(_) => "mog-gen",
            Command::PlantCorpus(_) => "plant-corpus",
            Command::TrainDec(_) => "train-dec",
            Command::TrainSg(_) => "train-sg",
            Command::Influence(_) => "influence",
            Command::LooAudit(_) => "loo-audit",
            Command::Weat(_) => "weat",
            Command::Cluster(_) => "cluster",
            Command::Mitigate(_) => "mitigate",
            Command::Overbias(_) => "overbias",
        }
    }
}

fn is_false(b: &bool) -> bool {
    !b
}

#[derive(Args, Debug, Default, Serialize)]
pub struct MogGenArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_class: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct PlantArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Where to write the matching WEAT spec.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec_out: Option<PathBuf>,
    /// 0.5 plants nothing, 1.0 pairs each target group only with its own attributes.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strength: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sentences: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterObjective {
    Dec,
    Nll,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct TrainDecArgs {
    /// MOG CSV.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Model JSON.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<ClusterObjective>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_updates: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// dim 16, window 3, 5 negatives, 10 epochs.
    Small,
    /// dim 100, window 3, 5 negatives, 100 epochs.
    Scifi,
    /// dim 100, window 10, 10 negatives, 60 epochs.
    Wnc,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct TrainSgArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    /// Receives input.txt, output.txt, initial.txt and run.json.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_neg: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_initial: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_floor: Option<f64>,
    /// Draw negatives from counts raised to 3/4 instead of raw counts.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smoothed_negatives: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holdout_fraction: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_count: Option<usize>,
    /// Drop the built-in English stopwords.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainLoss {
    Dec,
    Nll,
    Sg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestLoss {
    Nll,
    Mse,
    Weat,
    Sg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Direct when the model is small enough, LiSSA otherwise.
    Auto,
    Direct,
    Lissa,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct SolverArgs {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    /// LiSSA recursion depth.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    /// LiSSA scale; must exceed the largest Hessian eigenvalue.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct InfluenceArgs {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_loss: Option<TrainLoss>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_loss: Option<TestLoss>,
    /// Model JSON from train-dec, or the output directory of train-sg.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    /// MOG CSV the clustering model was trained on.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Corpus the embeddings were trained on.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    /// MOG rows forming the test batch (default: all).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_points: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weat_spec: Option<PathBuf>,
    /// Words whose drift forms the MSE test loss.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub words: Option<Vec<String>>,
    /// Drop out-of-vocabulary WEAT words with a warning instead of failing.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub skip_oov: bool,
    /// Split into amplifying (ranks 1..k) and mitigating (ranks -1..-k) sets.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top: Option<usize>,
    /// Restrict parameters to the rows of the test words.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub restrict: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    /// JSON Lines output.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct LooAuditArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Summary CSV; per-point correlations go to `<out>.points.csv`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_updates: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dec_lr: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dec_max_steps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nll_lr: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nll_steps: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct WeatArgs {
    /// Output directory of train-sg or mitigate.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weat_spec: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub skip_oov: bool,
    /// Optional JSON with the effect and per-word associations.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct ClusterArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    /// Cluster only these words (default: whole vocabulary).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub words: Option<Vec<String>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_min: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    /// Silhouette CSV `k,silhouette`; assignments go to `<out>.assignments.csv`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mitigate,
    Overbias,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct MitigateArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weat_spec: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub skip_oov: bool,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_amplify: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_mitigate: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// Fine-tuning learning rate.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub early_stop: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refresh_sets: Option<bool>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    /// Receives trajectory.csv and the fine-tuned tables.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}
