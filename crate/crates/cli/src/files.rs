//! Model and dataset files shared between subcommands.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use crossloss::data::{tokenize, Corpus, TokenizerConfig};
use crossloss::io;
use crossloss::models::{ClusterModel, LabeledPoint, SkipGramModel};
use crossloss::training::TrainConfig;
use crossloss::weat::WeatSpec;
use crossloss::Vocab;
use serde::{Deserialize, Serialize};

use crate::args::ClusterObjective;

pub fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref().with_context(|| format!("missing --{flag}"))
}

pub fn read_points(path: &Path) -> Result<Vec<LabeledPoint<f64>>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(io::read_mog(file, &path.display().to_string())?)
}

/// One document per line.
pub fn read_documents(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading corpus {}", path.display()))?;
    Ok(text.lines().map(str::to_string).collect())
}

pub fn load_spec(path: &Path) -> Result<WeatSpec> {
    io::load_weat_spec(path).with_context(|| format!("loading WEAT spec {}", path.display()))
}

/// Drops out-of-vocabulary words when `skip_oov` is set; otherwise fails
/// listing every unknown word.
pub fn spec_for_vocab(spec: &WeatSpec, vocab: &Vocab, skip_oov: bool) -> Result<WeatSpec> {
    if !skip_oov {
        spec.resolve(vocab).with_context(|| format!("WEAT '{}' has words outside the vocabulary", spec.name))?;
        return Ok(spec.clone());
    }
    let ids = spec.resolve_skipping_oov(vocab)?;
    let words = |ids: &[usize]| ids.iter().map(|&i| vocab.word(i).expect("resolved id").to_string()).collect();
    Ok(WeatSpec { name: spec.name.clone(), x: words(&ids.x), y: words(&ids.y), a: words(&ids.a), b: words(&ids.b) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterModelFile {
    pub objective: ClusterObjective,
    pub centroids: Vec<Vec<f64>>,
    /// The k-means centroids training started from.
    pub init_centroids: Vec<Vec<f64>>,
    pub class_of_cluster: Vec<usize>,
    pub accuracy: f64,
}

impl ClusterModelFile {
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).with_context(|| format!("opening model {}", path.display()))?;
        serde_json::from_reader(file).with_context(|| format!("parsing model {}", path.display()))
    }

    pub fn model(&self) -> Result<ClusterModel<f64>> {
        Ok(ClusterModel::new(self.centroids.clone())?)
    }
}

pub const INPUT_FILE: &str = "input.txt";
pub const OUTPUT_FILE: &str = "output.txt";
pub const INITIAL_FILE: &str = "initial.txt";
pub const RUN_FILE: &str = "run.json";

/// Bookkeeping saved next to the embedding tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkipGramRunFile {
    pub train: TrainConfig,
    pub tokenizer: TokenizerConfig,
    pub train_docs: Vec<usize>,
    pub holdout_docs: Vec<usize>,
    pub holdout_loss: Vec<f64>,
}

/// A skip-gram model directory as written by `train-sg` or `mitigate`.
pub struct SkipGramDir {
    pub model: SkipGramModel<f64>,
    pub initial: Vec<f64>,
    pub run: SkipGramRunFile,
}

fn load_table(path: &Path) -> Result<(Vocab, usize, Vec<f64>)> {
    io::load_embeddings(path).with_context(|| format!("loading embeddings {}", path.display()))
}

impl SkipGramDir {
    pub fn load(dir: &Path) -> Result<Self> {
        let (vocab, dim, input) = load_table(&dir.join(INPUT_FILE))?;
        let (v_out, d_out, output) = load_table(&dir.join(OUTPUT_FILE))?;
        let (v_init, d_init, initial) = load_table(&dir.join(INITIAL_FILE))?;
        if v_out != vocab || v_init != vocab || d_out != dim || d_init != dim {
            bail!("{}: embedding tables disagree on vocabulary or dimension", dir.display());
        }
        let run_path = dir.join(RUN_FILE);
        let run: SkipGramRunFile = serde_json::from_reader(
            File::open(&run_path).with_context(|| format!("opening {}", run_path.display()))?,
        )
        .with_context(|| format!("parsing {}", run_path.display()))?;
        let model = SkipGramModel::from_tables(vocab, dim, input, output)?;
        Ok(Self { model, initial, run })
    }

    /// Re-tokenizes the training corpus and checks it reproduces the saved
    /// vocabulary.
    pub fn corpus(&self, path: &Path) -> Result<Corpus> {
        let corpus = tokenize(&read_documents(path)?, &self.run.tokenizer)?;
        if &corpus.vocab != self.model.vocab() {
            bail!("{} does not reproduce the model's vocabulary; pass the corpus it was trained on", path.display());
        }
        Ok(corpus)
    }
}

pub fn embeddings_bytes(vocab: &Vocab, dim: usize, table: &[f64]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    io::write_embeddings(&mut buf, vocab, dim, table)?;
    Ok(buf)
}

pub fn json_bytes<S: Serialize>(value: &S) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    Ok(buf)
}
