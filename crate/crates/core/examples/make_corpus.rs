//! Writes the bundled synthetic corpus.
//!
//! cargo run -p lexitutor --example make_corpus -- [OUT_DIR] [SENTENCES_PER_LEVEL] [SEED]

use std::path::PathBuf;

use lexitutor::corpus::{load_corpus, prepare_level, synthetic::write_corpus, Level};

fn main() -> lexitutor::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("crates/core/data/corpus"));
    let per_level: usize = args.next().map_or(1500, |s| s.parse().expect("sentences per level"));
    let seed: u64 = args.next().map_or(2024, |s| s.parse().expect("seed"));
    write_corpus(&out, per_level, seed)?;
    let sentences = load_corpus(&out)?;
    for level in Level::ALL {
        let data = prepare_level(&sentences, level, 125, 10, 0)?;
        let n = data.split.train.len() + data.split.dev.len() + data.split.test.len();
        println!("{level}: vocab {} samples {n}", data.vocab.len());
    }
    Ok(())
}
