//! Mini-batch training, evaluation and metric export.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::{DatasetSplit, WindowSample};
use crate::error::{Error, Result};
use crate::model::{save_checkpoint, LanguageModel};
use crate::nn::{adam_step, argmax, cross_entropy_loss, softmax, softmax_cross_entropy_grad, AdamConfig, AdamState, Float, RngState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamConfig,
    pub seed: u64,
    /// Save `epoch-<n>.ckpt` into `checkpoint_dir` every this many epochs; 0 disables.
    pub checkpoint_every: usize,
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 150,
            optimizer: AdamConfig::default(),
            seed: 0,
            checkpoint_every: 0,
            checkpoint_dir: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::config("epochs must be >= 1"));
        }
        if self.batch_size < 1 {
            return Err(Error::config("batch_size must be >= 1"));
        }
        if self.checkpoint_every > 0 && self.checkpoint_dir.is_none() {
            return Err(Error::config("checkpoint_every needs a checkpoint_dir"));
        }
        Ok(())
    }
}

/// Metrics of one epoch. `epoch` is 1-based. Validation fields are `None`
/// when the dev set is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochMetrics>,
    /// Epoch with the highest dev accuracy, earliest on ties.
    pub best_epoch: Option<usize>,
    pub test: Option<Evaluation>,
}

impl TrainReport {
    /// Copy with every wall-clock field set to zero.
    pub fn without_timing(&self) -> TrainReport {
        let mut r = self.clone();
        r.epochs.iter_mut().for_each(|e| e.seconds = 0.0);
        r
    }
}

/// Mean cross-entropy and top-1 accuracy with dropout off. Ties in the
/// prediction go to the lowest id.
pub fn evaluate<T: Float>(model: &LanguageModel<T>, samples: &[WindowSample]) -> Result<Evaluation> {
    if samples.is_empty() {
        return Err(Error::config("cannot evaluate on an empty sample set"));
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for s in samples {
        let probs = model.predict_next_distribution(&s.context)?;
        loss += cross_entropy_loss(&probs, s.target)?.loss;
        if argmax(probs.data()) == s.target {
            correct += 1;
        }
    }
    let n = samples.len() as f64;
    Ok(Evaluation {
        loss: loss / n,
        accuracy: correct as f64 / n,
    })
}

/// Trains with Adam on batch-mean cross-entropy. Train metrics are running
/// means over the epoch's batches (dropout on); dev metrics are computed
/// after each epoch with dropout off.
pub fn train(model: &mut LanguageModel<f32>, split: &DatasetSplit, config: &TrainConfig) -> Result<TrainReport> {
    train_with(model, split, config, |_, _| {})
}

/// [`train`] with a callback invoked after every epoch.
pub fn train_with(
    model: &mut LanguageModel<f32>,
    split: &DatasetSplit,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics, &LanguageModel<f32>),
) -> Result<TrainReport> {
    config.validate()?;
    if split.train.is_empty() {
        return Err(Error::config("training set is empty"));
    }
    let mut shuffle_rng = RngState::new(config.seed);
    let mut dropout_rng = shuffle_rng.fork();
    let mut adam = AdamState::new();
    let mut step = 0u64;
    let mut order: Vec<usize> = (0..split.train.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        shuffle_rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.batch_size) {
            model.zero_grad();
            let scale = 1.0 / batch.len() as f32;
            for &i in batch {
                let s = &split.train[i];
                let (logits, trace) = model.forward(&s.context, Some(&mut dropout_rng))?;
                let probs = softmax(&logits)?;
                loss_sum += cross_entropy_loss(&probs, s.target)?.loss;
                if argmax(probs.data()) == s.target {
                    correct += 1;
                }
                let grad = softmax_cross_entropy_grad(&probs, s.target).map(|g| g * scale);
                model.backward(&trace, &grad)?;
            }
            step += 1;
            adam_step(&mut model.params_mut(), &mut adam, &config.optimizer, step);
        }
        model.zero_grad();

        let n = split.train.len() as f64;
        let val = if split.dev.is_empty() { None } else { Some(evaluate(model, &split.dev)?) };
        let metrics = EpochMetrics {
            epoch,
            train_loss: loss_sum / n,
            train_accuracy: correct as f64 / n,
            val_loss: val.map(|v| v.loss),
            val_accuracy: val.map(|v| v.accuracy),
            seconds: started.elapsed().as_secs_f64(),
        };
        on_epoch(&metrics, model);
        epochs.push(metrics);

        if config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0 {
            if let Some(dir) = &config.checkpoint_dir {
                save_checkpoint(model, &dir.join(format!("epoch-{epoch}.ckpt")))?;
            }
        }
    }

    let best_epoch = epochs
        .iter()
        .filter_map(|e| e.val_accuracy.map(|a| (e.epoch, a)))
        .fold(None, |best: Option<(usize, f64)>, (ep, a)| match best {
            Some((_, b)) if b >= a => best,
            _ => Some((ep, a)),
        })
        .map(|(ep, _)| ep);
    let test = if split.test.is_empty() { None } else { Some(evaluate(model, &split.test)?) };
    Ok(TrainReport { epochs, best_epoch, test })
}

pub const METRICS_HEADER: [&str; 6] = ["epoch", "train_loss", "train_acc", "val_loss", "val_acc", "seconds"];

#[derive(Serialize)]
struct MetricsRow {
    epoch: usize,
    train_loss: f64,
    train_acc: f64,
    val_loss: Option<f64>,
    val_acc: Option<f64>,
    seconds: f64,
}

/// Writes one CSV row per epoch. Missing validation values are empty fields.
pub fn export_metrics(report: &TrainReport, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_io)?;
    w.write_record(METRICS_HEADER)?;
    for e in &report.epochs {
        w.serialize(MetricsRow {
            epoch: e.epoch,
            train_loss: e.train_loss,
            train_acc: e.train_accuracy,
            val_loss: e.val_loss,
            val_acc: e.val_accuracy,
            seconds: e.seconds,
        })?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Reads a metrics CSV written by [`export_metrics`].
pub fn read_metrics(path: &Path) -> Result<Vec<EpochMetrics>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_io)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != METRICS_HEADER {
        return Err(Error::Format(format!("unexpected metrics header {header:?}")));
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let num = |i: usize| -> Result<f64> {
            row[i].parse().map_err(|_| Error::Format(format!("bad number {:?}", &row[i])))
        };
        let opt = |i: usize| -> Result<Option<f64>> { if row[i].is_empty() { Ok(None) } else { num(i).map(Some) } };
        out.push(EpochMetrics {
            epoch: row[0].parse().map_err(|_| Error::Format(format!("bad epoch {:?}", &row[0])))?,
            train_loss: num(1)?,
            train_accuracy: num(2)?,
            val_loss: opt(3)?,
            val_accuracy: opt(4)?,
            seconds: num(5)?,
        });
    }
    Ok(out)
}
