//! Dataset construction: Gaussian mixtures, corpus tokenization, skip-gram
//! sample building and planted-bias corpora.

mod mog;
mod planted;
mod samples;
mod stopwords;
mod tokenize;

pub use mog::{generate_mog, MogConfig};
pub use planted::{default_planted_pairs, filler_words, plant_biased_corpus, PlantConfig, PlantedPair};
pub use samples::{build_samples, build_samples_with, context_pairs, NegativeSampler};
pub use stopwords::ENGLISH_STOPWORDS;
pub use tokenize::{split_words, tokenize, Corpus, Document, TokenizerConfig, NUM_TOKEN};

use rand::{RngCore, SeedableRng};

/// Independent child seed for the `tag`-th use of `seed`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng.next_u64()
}
