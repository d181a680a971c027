use std::collections::HashMap;

use crate::error::{Error, Result};

/// Dense word ↔ id map; ids are `0..len()` in insertion order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn from_words<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocab::default();
        for w in words {
            let w = w.into();
            if vocab.index.contains_key(&w) {
                return Err(Error::InvalidConfig(format!("duplicate vocabulary word '{w}'")));
            }
            vocab.index.insert(w.clone(), vocab.words.len());
            vocab.words.push(w);
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Looks up every word, failing with the full list of unknown ones.
    pub fn ids_of<S: AsRef<str>>(&self, words: &[S]) -> Result<Vec<usize>> {
        let mut missing = Vec::new();
        let ids: Vec<usize> = words
            .iter()
            .filter_map(|w| {
                let id = self.id(w.as_ref());
                if id.is_none() {
                    missing.push(w.as_ref().to_string());
                }
                id
            })
            .collect();
        if missing.is_empty() {
            Ok(ids)
        } else {
            Err(Error::UnknownWords(missing))
        }
    }
}
