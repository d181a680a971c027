use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{build_samples_with, derive_seed, Corpus, NegativeSampler};
use crate::error::{Error, Result};
use crate::models::{skipgram_batch_loss, SkipGramModel, SkipGramSample, INPUT_TABLE};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub n_neg: usize,
    pub epochs: usize,
    pub lr_initial: f64,
    pub lr_floor: f64,
    /// Draw negatives from counts^0.75 instead of raw counts.
    pub smoothed_negatives: bool,
    /// Fraction of documents held out from training to monitor the loss.
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            dim: 16,
            window: 3,
            n_neg: 5,
            epochs: 10,
            lr_initial: 0.025,
            lr_floor: 1e-4,
            smoothed_negatives: false,
            holdout_fraction: 0.05,
            seed,
        }
    }

    /// Window 3, five negatives, 100 dimensions, 100 epochs.
    pub fn scifi(seed: u64) -> Self {
        Self { dim: 100, window: 3, n_neg: 5, epochs: 100, ..Self::new(seed) }
    }

    /// Window 10, ten negatives, 100 dimensions, 60 epochs.
    pub fn wnc(seed: u64) -> Self {
        Self { dim: 100, window: 10, n_neg: 10, epochs: 60, ..Self::new(seed) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 || self.window == 0 || self.n_neg == 0 {
            return Err(Error::InvalidConfig("need dim >= 2, window >= 1, n_neg >= 1".into()));
        }
        if !(self.lr_initial > 0.0) || !(self.lr_floor >= 0.0) || self.lr_floor > self.lr_initial {
            return Err(Error::InvalidConfig("need lr_initial > 0 and 0 <= lr_floor <= lr_initial".into()));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::InvalidConfig("holdout_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }

    fn sampler(&self, corpus: &Corpus) -> Result<NegativeSampler> {
        NegativeSampler::new(&corpus.freq, self.smoothed_negatives)
    }

    /// The fixed per-document tuples influence is computed over.
    pub fn influence_samples(&self, corpus: &Corpus) -> Result<Vec<Vec<SkipGramSample>>> {
        build_samples_with(corpus, &self.sampler(corpus)?, self.window, self.n_neg, self.seed)
    }
}

/// A trained skip-gram model with the bookkeeping needed downstream.
#[derive(Clone, Debug)]
pub struct SkipGramRun<T> {
    pub model: SkipGramModel<T>,
    /// Input table right after initialisation.
    pub initial_input: Vec<T>,
    /// Document ids used for training, ascending.
    pub train_docs: Vec<usize>,
    pub holdout_docs: Vec<usize>,
    /// Mean held-out tuple loss before training and after each epoch.
    pub holdout_loss: Vec<T>,
}

/// SGD over skip-gram tuples with a linearly decaying learning rate.
///
/// Each epoch redraws negatives, visits training documents in a freshly
/// shuffled order and takes one step per tuple.
pub fn train_skipgram<T: Scalar>(corpus: &Corpus, cfg: &TrainConfig) -> Result<SkipGramRun<T>> {
    cfg.validate()?;
    if corpus.token_count() == 0 {
        return Err(Error::InvalidConfig("corpus has no tokens".into()));
    }
    let sampler = cfg.sampler(corpus)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = SkipGramModel::<T>::random_init(corpus.vocab.clone(), cfg.dim, &mut rng);
    let initial_input = model.params().segment(INPUT_TABLE).expect("input segment").to_vec();

    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut rng);
    let n_hold = (corpus.len() as f64 * cfg.holdout_fraction).floor() as usize;
    let mut holdout_docs = order[..n_hold].to_vec();
    let mut train_docs = order[n_hold..].to_vec();
    holdout_docs.sort_unstable();
    train_docs.sort_unstable();

    let eval = build_samples_with(corpus, &sampler, cfg.window, cfg.n_neg, derive_seed(cfg.seed, u64::MAX))?;
    let holdout: Vec<SkipGramSample> = holdout_docs.iter().flat_map(|&d| eval[d].iter().cloned()).collect();
    let holdout_mean = |m: &SkipGramModel<T>| -> Result<T> {
        if holdout.is_empty() { Ok(T::zero()) } else { skipgram_batch_loss(m, &holdout) }
    };
    let mut holdout_loss = vec![holdout_mean(&model)?];

    let per_epoch: usize = train_docs
        .iter()
        .map(|&d| crate::data::context_pairs(&corpus.documents[d].tokens, cfg.window).len())
        .sum();
    let total_steps = (per_epoch * cfg.epochs).max(1) as f64;
    let obj = model.objective();
    let mut step = 0usize;
    for epoch in 0..cfg.epochs {
        let samples = build_samples_with(corpus, &sampler, cfg.window, cfg.n_neg, derive_seed(cfg.seed, epoch as u64))?;
        let mut visit = train_docs.clone();
        visit.shuffle(&mut rng);
        let values = model.params_mut().values_mut();
        let mut epoch_loss = 0.0;
        for &d in &visit {
            for s in &samples[d] {
                let progress = step as f64 / total_steps;
                let lr = cfg.lr_initial - (cfg.lr_initial - cfg.lr_floor) * progress;
                epoch_loss += obj.sgd_step(values, s, T::of(lr))?.to_f64_lossy();
                step += 1;
            }
        }
        if !epoch_loss.is_finite() || !model.params().is_finite() {
            return Err(Error::TrainingDiverged(format!("skip-gram loss became non-finite in epoch {}", epoch + 1)));
        }
        let hl = holdout_mean(&model)?;
        info!(
            "epoch {}/{}: train loss {:.6}, held-out loss {:.6}",
            epoch + 1,
            cfg.epochs,
            epoch_loss / per_epoch.max(1) as f64,
            hl.to_f64_lossy()
        );
        holdout_loss.push(hl);
    }
    Ok(SkipGramRun { model, initial_input, train_docs, holdout_docs, holdout_loss })
}
