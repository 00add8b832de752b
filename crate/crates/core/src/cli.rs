//! Command-line front end. `run` parses arguments and dispatches; output
//! goes to the given writers so commands can be tested in-process.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::corpus::{encode, load_corpus, make_windows, prepare_level, sentences_for, split_dataset, DatasetSplit, Level, LevelData, WindowSample};
use crate::error::Error;
use crate::generation::{generate, GenerationRequest, Strategy};
use crate::model::{build_model, load_checkpoint, save_checkpoint, LanguageModel, ModelConfig, Preset};
use crate::nn::{AdamConfig, RngState};
use crate::service::{self, ServiceConfig};
use crate::training::{evaluate, export_metrics, train_with, Evaluation, TrainConfig, TrainReport};

#[derive(Debug, Parser)]
#[command(name = "lexitutor", version, about = "Train, inspect and serve next-word LSTM language models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one preset on one level and write a checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a split of a corpus.
    Eval(EvalArgs),
    /// Continue a seed text with a trained model.
    Generate(GenerateArgs),
    /// Train several presets on identical splits and tabulate test results.
    Compare(CompareArgs),
    /// Print a checkpoint's configuration and layer manifest.
    Inspect(InspectArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Corpus root containing one directory per level.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub level: Level,
    /// Context window length.
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    /// Vocabulary cap, including the two reserved entries.
    #[arg(long, default_value_t = 125)]
    pub vocab: usize,
    /// Seed for the split, initialization, shuffling and dropout.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct HyperArgs {
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 150)]
    pub batch: usize,
    #[arg(long, default_value_t = 70)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 100)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0.6)]
    pub dropout: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Make the first stacked/simple LSTM layer bidirectional.
    #[arg(long)]
    pub bidirectional: bool,
    /// Dot-product attention in the encdec preset.
    #[arg(long)]
    pub attention: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "stacked")]
    pub preset: Preset,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch metrics CSV.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Defaults to the level recorded in the checkpoint.
    #[arg(long)]
    pub level: Option<Level>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "test")]
    pub split: SplitName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SplitName {
    Train,
    Dev,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub seed_text: String,
    #[arg(long, default_value_t = 5)]
    pub words: usize,
    #[arg(long, default_value = "greedy")]
    pub strategy: Strategy,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    /// Sampling seed; without it sampling draws from OS entropy.
    #[arg(long)]
    pub rng: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated presets.
    #[arg(long, value_delimiter = ',', default_value = "simple,stacked,encdec")]
    pub presets: Vec<Preset>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Results CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Directory of `<level>.ckpt` files [env: LEXITUTOR_MODELS_DIR]
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// [env: LEXITUTOR_PORT, default 8080]
    #[arg(long)]
    pub port: Option<u16>,
    /// Session storage directory [env: LEXITUTOR_DATA_DIR]
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Allowed browser origin(s), comma-separated [env: LEXITUTOR_CORS_ORIGIN]
    #[arg(long)]
    pub cors_origin: Option<String>,
}

/// Exit status: 1 for bad input, 2 for internal failures.
#[derive(Debug)]
pub enum CliError {
    User(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::User(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = format!("{}: {e}", e.code());
        match e {
            Error::Index { .. } | Error::Shape(_) | Error::State(_) | Error::Numeric(_) => CliError::Internal(msg),
            _ => CliError::User(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::User(format!("IoError: {e}"))
    }
}

type CliResult = Result<(), CliError>;

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| dispatch(cli.command, out)));
    match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
        Err(_) => {
            let _ = writeln!(err, "error: internal failure (panic)");
            2
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> CliResult {
    match cmd {
        Command::Train(a) => cmd_train(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Generate(a) => cmd_generate(&a, out),
        Command::Compare(a) => cmd_compare(&a, out),
        Command::Inspect(a) => cmd_inspect(&a, out),
        Command::Serve(a) => cmd_serve(&a),
    }
}

fn model_config(preset: Preset, vocab_size: usize, window: usize, h: &HyperArgs) -> ModelConfig {
    ModelConfig {
        preset,
        vocab_size,
        embed_dim: h.embed_dim,
        hidden: h.hidden,
        window,
        dropout_rate: h.dropout,
        bidirectional_first_layer: h.bidirectional && preset != Preset::Encdec,
        use_attention: h.attention && preset == Preset::Encdec,
    }
}

fn train_config(seed: u64, h: &HyperArgs) -> TrainConfig {
    TrainConfig {
        epochs: h.epochs,
        batch_size: h.batch,
        optimizer: AdamConfig { lr: h.lr, ..AdamConfig::default() },
        seed,
        ..TrainConfig::default()
    }
}

fn load_level(d: &DataArgs) -> Result<LevelData, CliError> {
    let sentences = load_corpus(&d.corpus)?;
    if sentences_for(&sentences, d.level).is_empty() {
        return Err(CliError::User(format!("corpus {} has no sentences for level {}", d.corpus.display(), d.level)));
    }
    Ok(prepare_level(&sentences, d.level, d.vocab, d.window, d.seed)?)
}

/// Builds, trains and returns a model for one preset on prepared data.
pub fn train_preset(
    data: &LevelData,
    preset: Preset,
    window: usize,
    seed: u64,
    hyper: &HyperArgs,
    on_epoch: impl FnMut(&crate::training::EpochMetrics, &LanguageModel),
) -> Result<(LanguageModel, TrainReport), Error> {
    let cfg = model_config(preset, data.vocab.len(), window, hyper);
    let mut model: LanguageModel = build_model(cfg, data.vocab.clone(), &mut RngState::new(seed))?;
    model.set_level(Some(data.level));
    let report = train_with(&mut model, &data.split, &train_config(seed, hyper), on_epoch)?;
    Ok((model, report))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

pub fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> CliResult {
    let data = load_level(&a.data)?;
    writeln!(
        out,
        "level={} vocab={} train={} dev={} test={}",
        data.level,
        data.vocab.len(),
        data.split.train.len(),
        data.split.dev.len(),
        data.split.test.len()
    )?;
    let mut io_err = None;
    let (model, report) = train_preset(&data, a.preset, a.data.window, a.data.seed, &a.hyper, |e, _| {
        if let Err(x) = writeln!(
            out,
            "epoch {:>3} train_loss={:.4} train_acc={:.4} val_loss={} val_acc={}",
            e.epoch,
            e.train_loss,
            e.train_accuracy,
            fmt_opt(e.val_loss),
            fmt_opt(e.val_accuracy)
        ) {
            io_err.get_or_insert(x);
        }
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    save_checkpoint(&model, &a.out)?;
    if let Some(path) = &a.metrics {
        export_metrics(&report, path)?;
    }
    writeln!(out, "checkpoint: {}", a.out.display())?;
    writeln!(out, "parameters: {}", model.parameter_count())?;
    match report.test {
        Some(t) => writeln!(out, "test_loss={:.4} test_accuracy={:.4}", t.loss, t.accuracy)?,
        None => writeln!(out, "test set empty")?,
    }
    Ok(())
}

/// Rebuilds the level's windows with the checkpoint's own vocabulary and
/// window, then splits them with `seed`.
fn eval_samples(model: &LanguageModel, corpus: &Path, level: Level, seed: u64, which: SplitName) -> Result<Vec<WindowSample>, CliError> {
    let sentences = sentences_for(&load_corpus(corpus)?, level);
    let mut samples = Vec::new();
    for s in &sentences {
        samples.extend(make_windows(&encode(&s.tokens(), model.vocab()), model.window())?);
    }
    if which == SplitName::All {
        return Ok(samples);
    }
    let DatasetSplit { train, dev, test } = split_dataset(&samples, seed)?;
    Ok(match which {
        SplitName::Train => train,
        SplitName::Dev => dev,
        _ => test,
    })
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> CliResult {
    let model = load_checkpoint(&a.model)?;
    let level = a
        .level
        .or(model.level())
        .ok_or_else(|| CliError::User("checkpoint has no level; pass --level".into()))?;
    let samples = eval_samples(&model, &a.corpus, level, a.seed, a.split)?;
    let Evaluation { loss, accuracy } = evaluate(&model, &samples)?;
    writeln!(out, "samples={} loss={loss:.4} accuracy={accuracy:.4}", samples.len())?;
    Ok(())
}

pub fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write) -> CliResult {
    let model = load_checkpoint(&a.model)?;
    let level = model.level().unwrap_or(Level::Elemental);
    let model_id = a.model.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let request = GenerationRequest {
        seed_text: a.seed_text.clone(),
        level,
        num_words: a.words,
        strategy: a.strategy,
        temperature: a.temperature,
        rng_seed: a.rng,
    };
    let r = generate(&model, &model_id, &request)?;
    writeln!(out, "generated: {}", r.generated_words.join(" "))?;
    writeln!(out, "full_text: {}", r.full_text)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub preset: Preset,
    pub parameters: usize,
    pub test: Evaluation,
    pub best_epoch: Option<usize>,
    pub final_train_loss: f64,
}

/// Trains each preset on the same split with the same seed. Presets run on
/// separate threads; results come back in the requested order.
pub fn compare_presets(data: &LevelData, presets: &[Preset], window: usize, seed: u64, hyper: &HyperArgs) -> Result<Vec<CompareRow>, Error> {
    if data.split.test.is_empty() {
        return Err(Error::config("test split is empty"));
    }
    let results: Vec<Result<CompareRow, Error>> = std::thread::scope(|s| {
        let handles: Vec<_> = presets
            .iter()
            .map(|&preset| {
                s.spawn(move || {
                    let (model, report) = train_preset(data, preset, window, seed, hyper, |_, _| {})?;
                    Ok(CompareRow {
                        preset,
                        parameters: model.parameter_count(),
                        test: report.test.expect("test split checked non-empty"),
                        best_epoch: report.best_epoch,
                        final_train_loss: report.epochs.last().map_or(f64::NAN, |e| e.train_loss),
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("training thread panicked")).collect()
    });
    results.into_iter().collect()
}

pub fn cmd_compare(a: &CompareArgs, out: &mut dyn Write) -> CliResult {
    if a.presets.is_empty() {
        return Err(CliError::User("no presets given".into()));
    }
    let data = load_level(&a.data)?;
    let rows = compare_presets(&data, &a.presets, a.data.window, a.data.seed, &a.hyper)?;
    writeln!(
        out,
        "level={} vocab={} train={} dev={} test={} epochs={} seed={}",
        data.level,
        data.vocab.len(),
        data.split.train.len(),
        data.split.dev.len(),
        data.split.test.len(),
        a.hyper.epochs,
        a.data.seed
    )?;
    writeln!(out, "{:<8} {:>10} {:>10} {:>9} {:>10}", "preset", "parameters", "test_loss", "test_acc", "best_epoch")?;
    for r in &rows {
        writeln!(
            out,
            "{:<8} {:>10} {:>10.4} {:>9.4} {:>10}",
            r.preset.as_str(),
            r.parameters,
            r.test.loss,
            r.test.accuracy,
            r.best_epoch.map_or("-".into(), |e| e.to_string())
        )?;
    }
    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::User(format!("IoError: {e}")))?;
        w.write_record(["preset", "parameters", "test_loss", "test_accuracy", "best_epoch", "final_train_loss"])
            .map_err(Error::from)?;
        for r in &rows {
            w.write_record([
                r.preset.as_str().to_string(),
                r.parameters.to_string(),
                r.test.loss.to_string(),
                r.test.accuracy.to_string(),
                r.best_epoch.map_or(String::new(), |e| e.to_string()),
                r.final_train_loss.to_string(),
            ])
            .map_err(Error::from)?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn cmd_inspect(a: &InspectArgs, out: &mut dyn Write) -> CliResult {
    let model = load_checkpoint(&a.model)?;
    let c = model.config();
    writeln!(out, "preset: {}", c.preset.as_str())?;
    writeln!(out, "level: {}", model.level().map_or("-".into(), |l| l.to_string()))?;
    writeln!(out, "vocab_size: {}", c.vocab_size)?;
    writeln!(out, "embed_dim: {}", c.embed_dim)?;
    writeln!(out, "hidden: {}", c.hidden)?;
    writeln!(out, "window: {}", c.window)?;
    writeln!(out, "dropout_rate: {}", c.dropout_rate)?;
    writeln!(out, "bidirectional_first_layer: {}", c.bidirectional_first_layer)?;
    writeln!(out, "use_attention: {}", c.use_attention)?;
    writeln!(out, "parameters: {}", model.parameter_count())?;
    writeln!(out, "layers:")?;
    for (name, p) in model.named_params() {
        let shape: Vec<String> = p.shape().iter().map(usize::to_string).collect();
        writeln!(out, "  {name} [{}] {}", shape.join("x"), p.len())?;
    }
    Ok(())
}

pub fn cmd_serve(a: &ServeArgs) -> CliResult {
    let mut cfg = ServiceConfig::from_env()?;
    if let Some(m) = &a.models {
        cfg.models_dir = m.clone();
    }
    if let Some(p) = a.port {
        cfg.port = p;
    }
    if let Some(d) = &a.data {
        cfg.data_dir = Some(d.clone());
    }
    if let Some(o) = &a.cors_origin {
        cfg.cors_origin = Some(o.clone());
    }
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .try_init();
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(service::serve(cfg))?;
    Ok(())
}
