use std::path::{Path, PathBuf};
use std::process::Command;

use lexitutor::cli::run;
use lexitutor::corpus::Vocabulary;
use lexitutor::model::{build_model, save_checkpoint, LanguageModel, ModelConfig, Preset};
use lexitutor::nn::RngState;

const SENTENCES: &str = "I like to read books.\nWe go to the park every day.\nShe reads a book at home.\nYou like the big red apple.\n\
They play in the park.\nI read books every night.\nWe like apples and tea.\nHe goes home at night.\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lexitutor"))
}

fn corpus(dir: &Path) -> PathBuf {
    let root = dir.join("corpus");
    for level in ["elemental", "pre_intermediate"] {
        std::fs::create_dir_all(root.join(level)).unwrap();
        std::fs::write(root.join(level).join("a.txt"), SENTENCES.repeat(4)).unwrap();
    }
    root
}

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("lexitutor").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn train_args<'a>(corpus: &'a str, out: &'a str, seed: &'a str) -> Vec<&'a str> {
    vec![
        "train", "--corpus", corpus, "--level", "elemental", "--window", "4", "--seed", seed, "--epochs", "3", "--batch", "16",
        "--embed-dim", "8", "--hidden", "10", "--out", out,
    ]
}

#[test]
fn help_and_version_exit_zero() {
    let o = bin().arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for cmd in ["train", "eval", "generate", "compare", "inspect", "serve"] {
        assert!(text.contains(cmd), "help lacks {cmd}");
    }
    let o = bin().arg("--version").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn bad_flags_exit_one() {
    assert_eq!(bin().args(["train", "--bogus"]).output().unwrap().status.code(), Some(1));
    assert_eq!(bin().output().unwrap().status.code(), Some(1));
    let (code, _, err) = run_cli(&["compare", "--corpus", "x", "--level", "elemental", "--presets", "simple,transformer"]);
    assert_eq!(code, 1, "{err}");
    let (code, _, _) = run_cli(&["train", "--corpus", "x", "--level", "advanced", "--out", "y"]);
    assert_eq!(code, 1);
}

#[test]
fn missing_corpus_exits_one_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let out = dir.path().join("m.ckpt");
    let o = bin()
        .args(["train", "--corpus", missing.to_str().unwrap(), "--level", "elemental", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("NotFound"));
    assert!(!out.exists());
}

#[test]
fn level_without_sentences_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let root = corpus(dir.path());
    let out = dir.path().join("m.ckpt");
    let (code, _, err) = run_cli(&["train", "--corpus", root.to_str().unwrap(), "--level", "upper_intermediate", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("upper_intermediate"));
}

#[test]
fn train_is_deterministic_and_generate_defaults_to_five_words() {
    let dir = tempfile::tempdir().unwrap();
    let root = corpus(dir.path());
    let root = root.to_str().unwrap();
    let a = dir.path().join("a.ckpt");
    let b = dir.path().join("b.ckpt");
    let metrics = dir.path().join("metrics.csv");

    let mut args_a = train_args(root, a.to_str().unwrap(), "7");
    args_a.extend(["--metrics", metrics.to_str().unwrap()]);
    let (code, out_a, err) = run_cli(&args_a);
    assert_eq!(code, 0, "{err}");
    let (code, out_b, _) = run_cli(&train_args(root, b.to_str().unwrap(), "7"));
    assert_eq!(code, 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let strip = |s: &str| s.lines().filter(|l| !l.starts_with("checkpoint:")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&out_a), strip(&out_b));
    assert!(out_a.starts_with("level=elemental"));
    assert_eq!(out_a.lines().filter(|l| l.starts_with("epoch")).count(), 3);
    assert!(out_a.contains("test_accuracy="));
    assert_eq!(std::fs::read_to_string(&metrics).unwrap().lines().count(), 4);

    let c = dir.path().join("c.ckpt");
    run_cli(&train_args(root, c.to_str().unwrap(), "8"));
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());

    let model = a.to_str().unwrap();
    let (code, out, err) = run_cli(&["generate", "--model", model, "--seed-text", "I like to"]);
    assert_eq!(code, 0, "{err}");
    let words = out.lines().find_map(|l| l.strip_prefix("generated: ")).unwrap();
    assert_eq!(words.split(' ').count(), 5);
    assert!(out.contains("full_text: i like to "));
    let (_, again, _) = run_cli(&["generate", "--model", model, "--seed-text", "I like to"]);
    assert_eq!(out, again);

    let (code, out, _) = run_cli(&["generate", "--model", model, "--seed-text", "we go", "--words", "8", "--strategy", "sample", "--rng", "3"]);
    assert_eq!(code, 0);
    let (_, again, _) = run_cli(&["generate", "--model", model, "--seed-text", "we go", "--words", "8", "--strategy", "sample", "--rng", "3"]);
    assert_eq!(out, again);
    assert_eq!(out.lines().next().unwrap().split(' ').count(), 9);

    let (code, _, err) = run_cli(&["generate", "--model", model, "--seed-text", "  ?! "]);
    assert_eq!(code, 1);
    assert!(err.contains("EmptySeed"));

    let (code, out, err) = run_cli(&["eval", "--model", model, "--corpus", root, "--seed", "7"]);
    assert_eq!(code, 0, "{err}");
    let test_line = out_a.lines().find(|l| l.starts_with("test_loss=")).unwrap();
    let acc = test_line.split("test_accuracy=").nth(1).unwrap();
    assert!(out.contains(&format!("accuracy={acc}")), "{out} vs {test_line}");
}

#[test]
fn inspect_reports_paper_parameter_count() {
    let dir = tempfile::tempdir().unwrap();
    let words: Vec<String> = (0..123).map(|i| format!("w{i}")).collect();
    let model: LanguageModel =
        build_model(ModelConfig::reference(Preset::Stacked, 125), Vocabulary::from_words(words).unwrap(), &mut RngState::new(0)).unwrap();
    let path = dir.path().join("paper.ckpt");
    save_checkpoint(&model, &path).unwrap();
    let (code, out, err) = run_cli(&["inspect", "--model", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.lines().any(|l| l == "parameters: 180275"), "{out}");
    assert!(out.contains("vocab_size: 125"));
    assert!(out.contains("window: 10"));

    let names: Vec<String> = model.named_params().into_iter().map(|(n, _)| n).collect();
    let listed: Vec<&str> = out
        .lines()
        .skip_while(|l| *l != "layers:")
        .skip(1)
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    assert_eq!(listed, names);
}

#[test]
fn corrupt_or_missing_checkpoint_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let words: Vec<String> = ["a", "b"].iter().map(|w| w.to_string()).collect();
    let cfg = ModelConfig { embed_dim: 3, hidden: 4, window: 2, ..ModelConfig::reference(Preset::Simple, 4) };
    let model: LanguageModel = build_model(cfg, Vocabulary::from_words(words).unwrap(), &mut RngState::new(1)).unwrap();
    let good = dir.path().join("good.ckpt");
    save_checkpoint(&model, &good).unwrap();
    let bytes = std::fs::read(&good).unwrap();
    let truncated = dir.path().join("truncated.ckpt");
    std::fs::write(&truncated, &bytes[..bytes.len() - 6]).unwrap();
    let (code, _, err) = run_cli(&["inspect", "--model", truncated.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("CorruptCheckpoint"), "{err}");

    let bad = dir.path().join("bad.ckpt");
    std::fs::write(&bad, b"not a checkpoint at all").unwrap();
    let (code, _, err) = run_cli(&["inspect", "--model", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("FormatError"), "{err}");
    let o = bin().args(["generate", "--model", dir.path().join("none.ckpt").to_str().unwrap(), "--seed-text", "hi"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compare_prints_one_row_per_preset_and_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let root = corpus(dir.path());
    let csv = dir.path().join("cmp.csv");
    let args = [
        "compare", "--corpus", root.to_str().unwrap(), "--level", "pre_intermediate", "--window", "4", "--epochs", "2", "--batch", "16",
        "--embed-dim", "6", "--hidden", "8", "--csv", csv.to_str().unwrap(),
    ];
    let (code, out, err) = run_cli(&args);
    assert_eq!(code, 0, "{err}");
    let rows: Vec<&str> = out.lines().skip_while(|l| !l.starts_with("preset")).skip(1).collect();
    assert_eq!(rows.len(), 3);
    for (row, name) in rows.iter().zip(["simple", "stacked", "encdec"]) {
        assert!(row.starts_with(name), "{row}");
    }
    let table = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(table.starts_with("preset,parameters,test_loss,test_accuracy,best_epoch,final_train_loss"));

    let (_, again, _) = run_cli(&args);
    assert_eq!(out, again);
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), table);
}
