//! Sliding-window next-word generation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{clean_and_tokenize, encode, left_padded, Level, Vocabulary};
use crate::error::{Error, Result};
use crate::model::LanguageModel;
use crate::nn::{argmax, Float, RngState, Tensor};

pub const DEFAULT_NUM_WORDS: usize = 5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Greedy,
    Sample,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Greedy => "greedy",
            Strategy::Sample => "sample",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Strategy::Greedy),
            "sample" => Ok(Strategy::Sample),
            other => Err(Error::config(format!("unknown strategy {other:?} (expected greedy or sample)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub seed_text: String,
    pub level: Level,
    #[serde(default = "default_num_words")]
    pub num_words: usize,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default)]
    pub rng_seed: Option<u64>,
}

fn default_num_words() -> usize {
    DEFAULT_NUM_WORDS
}

fn default_temperature() -> f64 {
    1.0
}

impl GenerationRequest {
    pub fn new(seed_text: impl Into<String>, level: Level) -> Self {
        GenerationRequest {
            seed_text: seed_text.into(),
            level,
            num_words: DEFAULT_NUM_WORDS,
            strategy: Strategy::Greedy,
            temperature: 1.0,
            rng_seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_words < 1 {
            return Err(Error::config("num_words must be >= 1"));
        }
        check_temperature(self.temperature)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub generated_words: Vec<String>,
    pub full_text: String,
    pub level: Level,
    pub model_id: String,
}

fn check_temperature(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("temperature must be a positive number, got {t}")))
    }
}

/// `p_i^(1/τ)` renormalized, computed in log space.
pub fn apply_temperature<T: Float>(probs: &Tensor<T>, temperature: f64) -> Result<Tensor<T>> {
    check_temperature(temperature)?;
    let p = probs.data();
    if p.is_empty() || p.iter().any(|v| !v.is_finite() || *v < T::zero()) || p.iter().all(|v| *v == T::zero()) {
        return Err(Error::Numeric("temperature needs a non-negative, non-zero distribution".into()));
    }
    let logs: Vec<f64> = p
        .iter()
        .map(|v| if *v > T::zero() { v.as_f64().ln() / temperature } else { f64::NEG_INFINITY })
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Tensor::from_vec(probs.shape(), exps.into_iter().map(|e| T::from_f64(e / sum)).collect())
}

/// Zeroes the pad and oov entries and renormalizes. Falls back to uniform
/// over ordinary words if everything else underflowed.
fn mask_special<T: Float>(probs: &Tensor<T>) -> Vec<f64> {
    let mut p: Vec<f64> = probs
        .data()
        .iter()
        .enumerate()
        .map(|(i, v)| if Vocabulary::is_special(i) { 0.0 } else { v.as_f64() })
        .collect();
    let sum: f64 = p.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        p.iter_mut().for_each(|v| *v /= sum);
    } else {
        let n = p.len() - 2;
        for (i, v) in p.iter_mut().enumerate() {
            *v = if Vocabulary::is_special(i) { 0.0 } else { 1.0 / n as f64 };
        }
    }
    p
}

fn sample_index(p: &[f64], rng: &mut RngState) -> usize {
    let u = rng.next_f64();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &v) in p.iter().enumerate() {
        if v <= 0.0 {
            continue;
        }
        acc += v;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Cleans and encodes the seed, then repeatedly predicts the next word from
/// the last `W` ids (left-padded) and appends it.
pub fn generate<T: Float>(model: &LanguageModel<T>, model_id: &str, request: &GenerationRequest) -> Result<GenerationResult> {
    request.validate()?;
    if let Some(level) = model.level() {
        if level != request.level {
            return Err(Error::InvalidLevel(format!(
                "model {model_id} serves {level}, request asked for {}",
                request.level
            )));
        }
    }
    let seed_tokens = clean_and_tokenize(&request.seed_text);
    if seed_tokens.is_empty() {
        return Err(Error::EmptySeed);
    }
    let mut ids = encode(&seed_tokens, model.vocab());
    let mut rng = match (request.strategy, request.rng_seed) {
        (Strategy::Sample, Some(seed)) => Some(RngState::new(seed)),
        (Strategy::Sample, None) => Some(RngState::new(rand::random())),
        (Strategy::Greedy, _) => None,
    };

    let mut words = Vec::with_capacity(request.num_words);
    for _ in 0..request.num_words {
        let context = left_padded(&ids, model.window());
        let probs = model.predict_next_distribution(&context)?;
        let next = match rng.as_mut() {
            None => argmax(&mask_special(&probs)),
            Some(rng) => {
                let scaled = apply_temperature(&probs, request.temperature)?;
                sample_index(&mask_special(&scaled), rng)
            }
        };
        ids.push(next);
        words.push(model.vocab().word(next).expect("id below vocab size").to_owned());
    }

    let mut full = seed_tokens;
    full.extend(words.iter().cloned());
    Ok(GenerationResult {
        generated_words: words,
        full_text: full.join(" "),
        level: request.level,
        model_id: model_id.to_owned(),
    })
}
