#![allow(dead_code)]

use std::ffi::{CStr, CString};
use std::path::Path;

use lexitutor::corpus::{Level, Vocabulary};
use lexitutor::model::{build_model, save_checkpoint, LanguageModel, ModelConfig, Preset};
use lexitutor::nn::RngState;

pub const WORDS: [&str; 8] = ["i", "like", "tea", "you", "go", "home", "we", "read"];

pub fn tiny_model(seed: u64) -> LanguageModel {
    let words: Vec<String> = WORDS.iter().map(|w| w.to_string()).collect();
    let cfg = ModelConfig {
        preset: Preset::Stacked,
        vocab_size: words.len() + 2,
        embed_dim: 6,
        hidden: 8,
        window: 4,
        dropout_rate: 0.5,
        bidirectional_first_layer: false,
        use_attention: false,
    };
    let mut m: LanguageModel = build_model(cfg, Vocabulary::from_words(words).unwrap(), &mut RngState::new(seed)).unwrap();
    m.set_level(Some(Level::PreIntermediate));
    m
}

pub fn write_checkpoint(dir: &Path, seed: u64) -> (LanguageModel, CString) {
    let m = tiny_model(seed);
    let path = dir.join("pre_intermediate.ckpt");
    save_checkpoint(&m, &path).unwrap();
    (m, CString::new(path.to_str().unwrap()).unwrap())
}

pub fn last_error() -> Option<String> {
    let p = lexitutor_ffi::lt_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}
