use std::collections::{BTreeSet, HashMap};
use std::sync::OnceLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::stopwords::ENGLISH_STOPWORDS;
use crate::error::{Error, Result};
use crate::vocab::Vocab;

/// Token every all-digit word is mapped to.
pub const NUM_TOKEN: &str = "⟨NUM⟩";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub stopwords: BTreeSet<String>,
    pub min_count: usize,
    /// When set, the vocabulary is exactly this list (in this order) and
    /// `stopwords`/`min_count` are ignored.
    pub preset_vocab: Option<Vec<String>>,
}

impl TokenizerConfig {
    /// Lowercasing, no stopwords.
    pub fn frequency(min_count: usize) -> Self {
        Self { lowercase: true, stopwords: BTreeSet::new(), min_count, preset_vocab: None }
    }

    /// Built-in stopwords and a minimum count of five.
    pub fn with_stopwords() -> Self {
        Self {
            stopwords: ENGLISH_STOPWORDS.iter().map(|s| s.to_string()).collect(),
            ..Self::frequency(5)
        }
    }

    pub fn preset(words: Vec<String>) -> Self {
        Self { preset_vocab: Some(words), ..Self::frequency(1) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_count == 0 {
            return Err(Error::InvalidConfig("min_count must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub text: String,
    pub tokens: Vec<usize>,
}

/// Tokenised documents over a shared vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub vocab: Vocab,
    pub freq: Vec<u64>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.documents.iter().map(|d| d.tokens.len()).sum()
    }

    /// Document rendered back as space-separated vocabulary words.
    pub fn render(&self, doc: usize) -> String {
        self.documents[doc]
            .tokens
            .iter()
            .map(|&t| self.vocab.word(t).unwrap_or_default())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn word_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"⟨NUM⟩|[\p{L}\p{N}]+").expect("static regex"))
}

/// Splits raw text into normalised word tokens (no vocabulary filtering).
pub fn split_words(text: &str, lowercase: bool) -> Vec<String> {
    word_regex()
        .find_iter(text)
        .map(|m| {
            let w = m.as_str();
            if w == NUM_TOKEN || w.chars().all(char::is_numeric) {
                NUM_TOKEN.to_string()
            } else if lowercase {
                w.to_lowercase()
            } else {
                w.to_string()
            }
        })
        .collect()
}

/// Builds a corpus from raw documents (one per entry). Documents that end up
/// with no tokens are kept so sample ids stay aligned with input lines.
///
/// In frequency mode the vocabulary is ordered by descending count, then
/// lexicographically.
pub fn tokenize<S: AsRef<str> + Sync>(docs: &[S], cfg: &TokenizerConfig) -> Result<Corpus> {
    cfg.validate()?;
    if docs.is_empty() {
        return Err(Error::InvalidConfig("no documents to tokenize".into()));
    }
    let words: Vec<Vec<String>> = docs.par_iter().map(|d| split_words(d.as_ref(), cfg.lowercase)).collect();

    let vocab = match &cfg.preset_vocab {
        Some(preset) => {
            let preset: Vec<String> = if cfg.lowercase {
                preset.iter().map(|w| if w == NUM_TOKEN { w.clone() } else { w.to_lowercase() }).collect()
            } else {
                preset.clone()
            };
            Vocab::from_words(preset)?
        }
        None => {
            let mut counts: HashMap<&str, u64> = HashMap::new();
            for w in words.iter().flatten() {
                if !cfg.stopwords.contains(w) {
                    *counts.entry(w.as_str()).or_default() += 1;
                }
            }
            let mut kept: Vec<(&str, u64)> =
                counts.into_iter().filter(|&(_, c)| c >= cfg.min_count as u64).collect();
            kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            Vocab::from_words(kept.into_iter().map(|(w, _)| w))?
        }
    };
    if vocab.is_empty() {
        return Err(Error::Degenerate("tokenization produced an empty vocabulary".into()));
    }

    let mut freq = vec![0u64; vocab.len()];
    let documents: Vec<Document> = docs
        .iter()
        .zip(words)
        .map(|(text, ws)| {
            let tokens: Vec<usize> = ws.iter().filter_map(|w| vocab.id(w)).collect();
            Document { text: text.as_ref().to_string(), tokens }
        })
        .collect();
    for t in documents.iter().flat_map(|d| &d.tokens) {
        freq[*t] += 1;
    }
    Ok(Corpus { documents, vocab, freq })
}
