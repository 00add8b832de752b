use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::error::{Error, Result};

pub const PAD: &str = "<pad>";
pub const OOV: &str = "<oov>";
pub const PAD_ID: usize = 0;
pub const OOV_ID: usize = 1;

/// Dense word ↔ id mapping. Ids 0 and 1 are reserved for padding and
/// out-of-vocabulary words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds from the non-reserved words, in id order starting at 2.
    pub fn from_words<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut all = vec![PAD.to_string(), OOV.to_string()];
        all.extend(words.into_iter().map(Into::into));
        Self::try_from(all)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    pub fn is_special(id: usize) -> bool {
        id == PAD_ID || id == OOV_ID
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = Error;

    fn try_from(words: Vec<String>) -> Result<Self> {
        if words.len() < 2 || words[PAD_ID] != PAD || words[OOV_ID] != OOV {
            return Err(Error::Format(format!(
                "vocabulary must start with {PAD:?}, {OOV:?}"
            )));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Format(format!("duplicate vocabulary word {w:?}")));
            }
        }
        Ok(Vocabulary { words, index })
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.words
    }
}

/// Keeps the `max_size − 2` most frequent tokens, ties broken by ascending
/// word, after the two reserved entries.
pub fn build_vocabulary(sentences: &[Sentence], max_size: usize) -> Result<Vocabulary> {
    if max_size < 3 {
        return Err(Error::config(format!("vocabulary max_size must be >= 3, got {max_size}")));
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for s in sentences {
        for t in s.tokens() {
            if t != PAD && t != OOV {
                *counts.entry(t).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    // BTreeMap order is ascending by word; a stable sort on count keeps that for ties.
    ranked.sort_by(|a, b| b.1.cmp(&a.1));
    Vocabulary::from_words(ranked.into_iter().take(max_size - 2).map(|(w, _)| w))
}

pub fn encode<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> Vec<usize> {
    tokens
        .iter()
        .map(|t| vocab.id(t.as_ref()).unwrap_or(OOV_ID))
        .collect()
}
