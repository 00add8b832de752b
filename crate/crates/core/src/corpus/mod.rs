//! Level-tagged sentence corpora and the windowed next-word samples built from them.
//!
//! On disk a corpus is a directory with one subdirectory per [`Level`], each
//! holding UTF-8 `.txt` files with one sentence per line.

mod clean;
mod dataset;
pub mod synthetic;
mod vocab;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use clean::clean_and_tokenize;
pub(crate) use dataset::left_padded;
pub use dataset::{make_windows, prepare_level, split_dataset, DatasetSplit, LevelData, WindowSample};
pub use vocab::{build_vocabulary, encode, Vocabulary, OOV, OOV_ID, PAD, PAD_ID};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Elemental,
    PreIntermediate,
    UpperIntermediate,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Elemental, Level::PreIntermediate, Level::UpperIntermediate];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Elemental => "elemental",
            Level::PreIntermediate => "pre_intermediate",
            Level::UpperIntermediate => "upper_intermediate",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Level::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::InvalidLevel(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub level: Level,
}

impl Sentence {
    pub fn tokens(&self) -> Vec<String> {
        clean_and_tokenize(&self.text)
    }
}

/// Reads `<root>/<level>/*.txt`. Lines that are blank, or empty once cleaned,
/// are skipped. Directories and files are visited in name order.
pub fn load_corpus(root: &Path) -> Result<Vec<Sentence>> {
    if !root.is_dir() {
        return Err(Error::NotFound(root.to_path_buf()));
    }
    let mut dirs: Vec<_> = fs::read_dir(root)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|e| e.path().is_dir())
        .collect();
    dirs.sort_by_key(|e| e.file_name());

    let mut sentences = Vec::new();
    for dir in dirs {
        let name = dir.file_name().to_string_lossy().into_owned();
        let level: Level = name.parse()?;
        let mut files: Vec<_> = fs::read_dir(dir.path())?
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "txt"))
            .collect();
        files.sort();
        for file in files {
            let text = fs::read_to_string(&file)?;
            for line in text.lines() {
                let line = line.trim();
                if line.is_empty() || clean_and_tokenize(line).is_empty() {
                    continue;
                }
                sentences.push(Sentence {
                    text: line.to_string(),
                    level,
                });
            }
        }
    }
    Ok(sentences)
}

/// Sentences of `level`, in corpus order.
pub fn sentences_for(sentences: &[Sentence], level: Level) -> Vec<Sentence> {
    sentences.iter().filter(|s| s.level == level).cloned().collect()
}
