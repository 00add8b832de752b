use serde::{Deserialize, Serialize};

use crate::corpus::{build_vocabulary, encode, sentences_for, Level, Sentence, Vocabulary, PAD_ID};
use crate::error::{Error, Result};
use crate::nn::RngState;

/// A context window of exactly `W` ids and the id that follows it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WindowSample {
    pub context: Vec<usize>,
    pub target: usize,
}

/// One sample per target position `1..n`; the context is the last `window`
/// ids before the target, left-padded with the pad id. Targets equal to the
/// pad id (only possible for a literal `<pad>` token) are skipped.
pub fn make_windows(ids: &[usize], window: usize) -> Result<Vec<WindowSample>> {
    if window < 1 {
        return Err(Error::config("window length must be >= 1"));
    }
    let mut out = Vec::with_capacity(ids.len().saturating_sub(1));
    for i in 1..ids.len() {
        if ids[i] == PAD_ID {
            continue;
        }
        out.push(WindowSample {
            context: left_padded(&ids[..i], window),
            target: ids[i],
        });
    }
    Ok(out)
}

/// Last `window` ids of `prefix`, left-padded with the pad id.
pub(crate) fn left_padded(prefix: &[usize], window: usize) -> Vec<usize> {
    let start = prefix.len().saturating_sub(window);
    let tail = &prefix[start..];
    let mut ctx = vec![PAD_ID; window - tail.len()];
    ctx.extend_from_slice(tail);
    ctx
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<WindowSample>,
    pub dev: Vec<WindowSample>,
    pub test: Vec<WindowSample>,
}

/// Seeded shuffle, then `floor(n/5)` samples to test and `floor(train/10)`
/// of the remainder to dev.
pub fn split_dataset(samples: &[WindowSample], seed: u64) -> Result<DatasetSplit> {
    if samples.len() < 10 {
        return Err(Error::config(format!(
            "need at least 10 samples to split, got {}",
            samples.len()
        )));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    RngState::new(seed).shuffle(&mut order);

    let n_test = samples.len() / 5;
    let n_dev = (samples.len() - n_test) / 10;
    let pick = |r: &[usize]| r.iter().map(|&i| samples[i].clone()).collect::<Vec<_>>();
    Ok(DatasetSplit {
        test: pick(&order[..n_test]),
        dev: pick(&order[n_test..n_test + n_dev]),
        train: pick(&order[n_test + n_dev..]),
    })
}

/// Vocabulary and split for one level.
#[derive(Debug, Clone)]
pub struct LevelData {
    pub level: Level,
    pub vocab: Vocabulary,
    pub split: DatasetSplit,
}

/// Filters `sentences` to `level`, builds its vocabulary, windows every
/// sentence and splits the samples.
pub fn prepare_level(
    sentences: &[Sentence],
    level: Level,
    max_vocab: usize,
    window: usize,
    seed: u64,
) -> Result<LevelData> {
    let sentences = sentences_for(sentences, level);
    let vocab = build_vocabulary(&sentences, max_vocab)?;
    let mut samples = Vec::new();
    for s in &sentences {
        samples.extend(make_windows(&encode(&s.tokens(), &vocab), window)?);
    }
    let split = split_dataset(&samples, seed)?;
    Ok(LevelData { level, vocab, split })
}
