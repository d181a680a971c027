use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weat::WeatSpec;

/// One target group with the attribute group it is planted alongside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedPair {
    pub targets: Vec<String>,
    pub attributes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantConfig {
    pub fillers: Vec<String>,
    pub targets_per_sentence: usize,
    pub attributes_per_sentence: usize,
    pub fillers_per_sentence: usize,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            fillers: filler_words(180),
            targets_per_sentence: 1,
            attributes_per_sentence: 2,
            fillers_per_sentence: 6,
        }
    }
}

/// Pronounceable made-up words, `n` of them, in a fixed order.
pub fn filler_words(n: usize) -> Vec<String> {
    const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t"];
    const NUCLEI: [&str; 5] = ["a", "e", "i", "o", "u"];
    let syllables: Vec<String> = ONSETS.iter().flat_map(|o| NUCLEI.iter().map(move |v| format!("{o}{v}"))).collect();
    syllables
        .iter()
        .flat_map(|a| syllables.iter().map(move |b| format!("{a}{b}")))
        .step_by(7)
        .take(n)
        .collect()
}

/// Two target groups and two attribute groups of eight words each, plus the
/// matching WEAT spec (X/A planted together, Y/B planted together).
pub fn default_planted_pairs() -> (Vec<PlantedPair>, WeatSpec) {
    let group = |prefix: &str| (0..8).map(|i| format!("{prefix}{}", ["a", "e", "i", "o", "u", "y", "ar", "or"][i])).collect::<Vec<_>>();
    let (x, y, a, b) = (group("zorv"), group("quil"), group("vemb"), group("jusk"));
    let spec = WeatSpec {
        name: "planted".into(),
        x: x.clone(),
        y: y.clone(),
        a: a.clone(),
        b: b.clone(),
    };
    (
        vec![PlantedPair { targets: x, attributes: a }, PlantedPair { targets: y, attributes: b }],
        spec,
    )
}

/// Template sentences. Each picks a group and one of its target words
/// uniformly; every attribute slot then comes from the target's own group
/// with probability `½ + (strength − ½)·(k+1)/n` for target `k` of `n`, and
/// otherwise from another group chosen uniformly. The most stereotyped
/// target co-occurs with its own attributes at rate `strength`; at ½ every
/// target is symmetric. Graded rates give targets distinct associations, so
/// the WEAT effect size is not pinned at its ±2 bound. Word order within a
/// sentence is shuffled.
pub fn plant_biased_corpus(
    pairs: &[PlantedPair],
    strength: f64,
    size: usize,
    seed: u64,
    cfg: &PlantConfig,
) -> Result<Vec<String>> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(Error::InvalidConfig(format!("strength must lie in [0, 1], got {strength}")));
    }
    if size == 0 {
        return Err(Error::InvalidConfig("planted corpus size must be >= 1".into()));
    }
    if pairs.len() < 2 || pairs.iter().any(|p| p.targets.is_empty() || p.attributes.is_empty()) {
        return Err(Error::InvalidConfig("need at least 2 non-empty target/attribute groups".into()));
    }
    if cfg.fillers.is_empty() && cfg.fillers_per_sentence > 0 {
        return Err(Error::InvalidConfig("filler vocabulary is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(size);
    for _ in 0..size {
        let g = rng.random_range(0..pairs.len());
        let mut words: Vec<&str> = Vec::new();
        let mut rate = 0.5;
        for _ in 0..cfg.targets_per_sentence {
            let k = rng.random_range(0..pairs[g].targets.len());
            rate = 0.5 + (strength - 0.5) * (k + 1) as f64 / pairs[g].targets.len() as f64;
            words.push(&pairs[g].targets[k]);
        }
        for _ in 0..cfg.attributes_per_sentence {
            let source = if rng.random_bool(rate) {
                g
            } else {
                let other = rng.random_range(0..pairs.len() - 1);
                if other >= g { other + 1 } else { other }
            };
            words.push(pairs[source].attributes.choose(&mut rng).expect("non-empty"));
        }
        for _ in 0..cfg.fillers_per_sentence {
            words.push(cfg.fillers.choose(&mut rng).expect("non-empty"));
        }
        words.shuffle(&mut rng);
        docs.push(words.join(" "));
    }
    Ok(docs)
}
