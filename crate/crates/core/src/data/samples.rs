use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tokenize::Corpus;
use crate::error::{Error, Result};
use crate::models::SkipGramSample;

/// Draws negative word ids from the unigram distribution.
#[derive(Clone, Debug)]
pub struct NegativeSampler {
    dist: WeightedIndex<f64>,
    weights: Vec<f64>,
    total: f64,
}

impl NegativeSampler {
    /// Weights are raw counts, or counts^0.75 when `smoothed`.
    pub fn new(freq: &[u64], smoothed: bool) -> Result<Self> {
        let weights: Vec<f64> = freq
            .iter()
            .map(|&c| if smoothed { (c as f64).powf(0.75) } else { c as f64 })
            .collect();
        let dist = WeightedIndex::new(&weights)
            .map_err(|e| Error::Degenerate(format!("unigram distribution: {e}")))?;
        let total = weights.iter().sum();
        Ok(Self { dist, weights, total })
    }

    /// One negative that is neither `center` nor `context`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, center: usize, context: usize) -> Result<usize> {
        let mut excluded = self.weights[center];
        if context != center {
            excluded += self.weights[context];
        }
        if !(self.total - excluded > 0.0) {
            return Err(Error::Degenerate(format!(
                "no eligible negative for center {center}, context {context}"
            )));
        }
        loop {
            let w = self.dist.sample(rng);
            if w != center && w != context {
                return Ok(w);
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }
}

/// (center, context) pairs in document order: for each position, offsets
/// `−window..−1` then `1..window`, clipped to the document.
pub fn context_pairs(tokens: &[usize], window: usize) -> Vec<(usize, usize)> {
    let n = tokens.len();
    let mut pairs = Vec::new();
    for j in 0..n {
        let lo = j.saturating_sub(window);
        let hi = (j + window).min(n.saturating_sub(1));
        for k in (lo..j).chain(j + 1..=hi) {
            pairs.push((tokens[j], tokens[k]));
        }
    }
    pairs
}

/// Skip-gram samples per document. Document `i` draws its negatives from
/// stream `i` of a ChaCha generator seeded with `seed`, so the result does
/// not depend on scheduling.
pub fn build_samples_with(
    corpus: &Corpus,
    sampler: &NegativeSampler,
    window: usize,
    n_neg: usize,
    seed: u64,
) -> Result<Vec<Vec<SkipGramSample>>> {
    if window == 0 || n_neg == 0 {
        return Err(Error::InvalidConfig("window and n_neg must be >= 1".into()));
    }
    corpus
        .documents
        .par_iter()
        .enumerate()
        .map(|(i, doc)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            context_pairs(&doc.tokens, window)
                .into_iter()
                .map(|(center, context)| {
                    let negatives =
                        (0..n_neg).map(|_| sampler.draw(&mut rng, center, context)).collect::<Result<_>>()?;
                    Ok(SkipGramSample { center, context, negatives })
                })
                .collect()
        })
        .collect()
}

/// [`build_samples_with`] using raw unigram counts.
pub fn build_samples(corpus: &Corpus, window: usize, n_neg: usize, seed: u64) -> Result<Vec<Vec<SkipGramSample>>> {
    let sampler = NegativeSampler::new(&corpus.freq, false)?;
    build_samples_with(corpus, &sampler, window, n_neg, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::tokenize::{tokenize, TokenizerConfig};

    #[test]
    fn window_one_pairs() {
        assert_eq!(context_pairs(&[0, 1, 2], 1), vec![(0, 1), (1, 0), (1, 2), (2, 1)]);
        assert!(context_pairs(&[4], 3).is_empty());
        assert!(context_pairs(&[], 3).is_empty());
    }

    #[test]
    fn counts_and_exclusions() {
        let docs = ["a b c d e f", "g", "a c e g b d f"];
        let c = tokenize(&docs, &TokenizerConfig::frequency(1)).unwrap();
        let s = build_samples(&c, 2, 3, 7).unwrap();
        let expect = |n: usize| (0..n).map(|j| j.min(2) + (n - 1 - j).min(2)).sum::<usize>();
        assert_eq!(s[0].len(), expect(6));
        assert!(s[1].is_empty());
        assert_eq!(s[2].len(), expect(7));
        for x in s.iter().flatten() {
            assert_eq!(x.negatives.len(), 3);
            assert!(x.negatives.iter().all(|&n| n != x.center && n != x.context));
        }
        assert_eq!(s, build_samples(&c, 2, 3, 7).unwrap());
        assert_ne!(s, build_samples(&c, 2, 3, 8).unwrap());
    }

    #[test]
    fn two_word_vocab_has_no_negatives() {
        let c = tokenize(&["a b"], &TokenizerConfig::frequency(1)).unwrap();
        assert!(matches!(build_samples(&c, 1, 1, 0), Err(Error::Degenerate(_))));
    }
}
