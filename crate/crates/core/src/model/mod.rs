//! Next-word language models: preset assembly, inference and checkpoints.

mod checkpoint;
mod network;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Level, Vocabulary};
use crate::error::{Error, Result};
use crate::nn::dropout::check_rate;
use crate::nn::softmax::{argmax, softmax};
use crate::nn::{Float, ParamTensor, RngState, Tensor};

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta, LayerEntry, CHECKPOINT_MAGIC, FORMAT_VERSION};
pub use network::Trace;
use network::Network;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Simple,
    Stacked,
    Encdec,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Simple, Preset::Stacked, Preset::Encdec];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Simple => "simple",
            Preset::Stacked => "stacked",
            Preset::Encdec => "encdec",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown preset {s:?} (expected simple, stacked or encdec)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub preset: Preset,
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden: usize,
    pub window: usize,
    pub dropout_rate: f64,
    #[serde(default)]
    pub bidirectional_first_layer: bool,
    #[serde(default)]
    pub use_attention: bool,
}

impl ModelConfig {
    /// The reference topology: 70-dim embeddings, 100 hidden units, dropout
    /// 0.6, 10-word window.
    pub fn reference(preset: Preset, vocab_size: usize) -> Self {
        ModelConfig {
            preset,
            vocab_size,
            embed_dim: 70,
            hidden: 100,
            window: 10,
            dropout_rate: 0.6,
            bidirectional_first_layer: false,
            use_attention: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 3 {
            return Err(Error::config(format!("vocab_size must be >= 3, got {}", self.vocab_size)));
        }
        if self.embed_dim < 1 || self.hidden < 1 || self.window < 1 {
            return Err(Error::config("embed_dim, hidden and window must be >= 1"));
        }
        check_rate(self.dropout_rate)?;
        if self.use_attention && self.preset != Preset::Encdec {
            return Err(Error::config("attention is only available with the encdec preset"));
        }
        if self.bidirectional_first_layer && self.preset == Preset::Encdec {
            return Err(Error::config("the encdec preset has no bidirectional encoder"));
        }
        Ok(())
    }
}

/// A trained or freshly initialized next-word model with its vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageModel<T: Float = f32> {
    config: ModelConfig,
    vocab: Vocabulary,
    level: Option<Level>,
    net: Network<T>,
}

/// Glorot-uniform weights; zero biases except the LSTM forget-gate slice,
/// which starts at 1. Parameters are drawn in manifest order.
fn initialize<T: Float>(net: &mut Network<T>, rng: &mut RngState) {
    let names: Vec<String> = net.named_params().into_iter().map(|(n, _)| n).collect();
    for (name, p) in names.iter().zip(net.params_mut()) {
        if name.ends_with(".bias") {
            continue;
        }
        if name.ends_with(".b") {
            let h = p.len() / 4;
            p.value.data_mut()[h..2 * h].iter_mut().for_each(|v| *v = T::one());
            continue;
        }
        let shape = p.shape().to_vec();
        let limit = (6.0 / (shape[0] + shape[1]) as f64).sqrt();
        for v in p.value.data_mut() {
            *v = T::from_f64(rng.uniform(-limit, limit));
        }
    }
}

/// Builds and initializes the preset described by `config`.
pub fn build_model<T: Float>(config: ModelConfig, vocab: Vocabulary, rng: &mut RngState) -> Result<LanguageModel<T>> {
    let mut model = LanguageModel::zeros(config, vocab)?;
    initialize(&mut model.net, rng);
    Ok(model)
}

/// Total element count of `params`.
pub fn count_parameters<'a, T: Float>(params: impl IntoIterator<Item = &'a ParamTensor<T>>) -> usize {
    params.into_iter().map(ParamTensor::len).sum()
}

impl<T: Float> LanguageModel<T> {
    /// All-zero parameters with the layout of `config`.
    pub fn zeros(config: ModelConfig, vocab: Vocabulary) -> Result<Self> {
        config.validate()?;
        if vocab.len() != config.vocab_size {
            return Err(Error::config(format!(
                "vocabulary has {} words but vocab_size is {}",
                vocab.len(),
                config.vocab_size
            )));
        }
        let net = Network::zeros(&config);
        Ok(LanguageModel {
            config,
            vocab,
            level: None,
            net,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn level(&self) -> Option<Level> {
        self.level
    }

    pub fn set_level(&mut self, level: Option<Level>) {
        self.level = level;
    }

    pub fn window(&self) -> usize {
        self.config.window
    }

    pub fn parameter_count(&self) -> usize {
        count_parameters(self.net.named_params().into_iter().map(|(_, p)| p))
    }

    /// Parameters in manifest (checkpoint) order.
    pub fn named_params(&self) -> Vec<(String, &ParamTensor<T>)> {
        self.net.named_params()
    }

    pub fn params_mut(&mut self) -> Vec<&mut ParamTensor<T>> {
        self.net.params_mut()
    }

    pub fn zero_grad(&mut self) {
        self.net.params_mut().into_iter().for_each(ParamTensor::zero_grad);
    }

    /// Sets the final projection to zero, making every prediction uniform.
    pub fn zero_output_layer(&mut self) {
        let out = self.net.output_layer_mut();
        out.weight.value.fill(T::zero());
        out.bias.value.fill(T::zero());
    }

    fn check_context(&self, context: &[usize]) -> Result<()> {
        if context.len() != self.config.window {
            return Err(Error::shape(format!(
                "context has {} ids, model window is {}",
                context.len(),
                self.config.window
            )));
        }
        Ok(())
    }

    /// Logits and the trace for backpropagation. Dropout is applied only when
    /// `rng` is given (training mode).
    pub fn forward(&self, context: &[usize], rng: Option<&mut RngState>) -> Result<(Tensor<T>, Trace<T>)> {
        self.check_context(context)?;
        self.net.forward(context, rng)
    }

    /// Accumulates parameter gradients for the logit gradient `dlogits`.
    pub fn backward(&mut self, trace: &Trace<T>, dlogits: &Tensor<T>) -> Result<()> {
        dlogits.expect_shape(&[self.config.vocab_size], "logit gradient")?;
        self.net.backward(trace, dlogits)
    }

    /// Next-word distribution for a window of exactly `W` ids, dropout off.
    pub fn predict_next_distribution(&self, context: &[usize]) -> Result<Tensor<T>> {
        let (logits, _) = self.forward(context, None)?;
        softmax(&logits)
    }

    /// Most likely next id (lowest id on ties).
    pub fn predict_next(&self, context: &[usize]) -> Result<usize> {
        Ok(argmax(self.predict_next_distribution(context)?.data()))
    }

    pub fn cast<U: Float>(&self) -> LanguageModel<U> {
        LanguageModel {
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            level: self.level,
            net: self.net.cast(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(n: usize) -> Vocabulary {
        Vocabulary::from_words((2..n).map(|i| format!("w{i}"))).unwrap()
    }

    fn cfg(preset: Preset, v: usize, d: usize, h: usize, w: usize) -> ModelConfig {
        ModelConfig {
            preset,
            vocab_size: v,
            embed_dim: d,
            hidden: h,
            window: w,
            dropout_rate: 0.0,
            bidirectional_first_layer: false,
            use_attention: false,
        }
    }

    /// Closed-form count: embedding V·d, LSTM 4H(D+H+1), dense U(D+1).
    fn expected_count(c: &ModelConfig) -> usize {
        let lstm = |d: usize, h: usize| 4 * h * (d + h + 1);
        let dense = |d: usize, u: usize| u * (d + 1);
        let dirs = if c.bidirectional_first_layer { 2 } else { 1 };
        let emb = c.vocab_size * c.embed_dim;
        match c.preset {
            Preset::Simple => emb + dirs * lstm(c.embed_dim, c.hidden) + dense(dirs * c.hidden, c.vocab_size),
            Preset::Stacked => {
                emb + dirs * lstm(c.embed_dim, c.hidden)
                    + lstm(dirs * c.hidden, c.hidden)
                    + dense(c.hidden, c.hidden)
                    + dense(c.hidden, c.vocab_size)
            }
            Preset::Encdec => {
                let feat = if c.use_attention { 2 * c.hidden } else { c.hidden };
                emb + 2 * lstm(c.embed_dim, c.hidden) + dense(feat, c.vocab_size)
            }
        }
    }

    #[test]
    fn reference_stacked_count() {
        let c = ModelConfig::reference(Preset::Stacked, 125);
        let m: LanguageModel = build_model(c.clone(), vocab(125), &mut RngState::new(0)).unwrap();
        assert_eq!(expected_count(&c), 8_750 + 68_400 + 80_400 + 10_100 + 12_625);
        assert_eq!(m.parameter_count(), 180_275);
    }

    #[test]
    fn simple_layer_shapes() {
        let m: LanguageModel = build_model(cfg(Preset::Simple, 7, 3, 4, 2), vocab(7), &mut RngState::new(0)).unwrap();
        let shapes: Vec<Vec<usize>> = m.named_params().iter().map(|(_, p)| p.shape().to_vec()).collect();
        assert_eq!(shapes, vec![vec![7, 3], vec![16, 3], vec![16, 4], vec![16], vec![7, 4], vec![7]]);
    }

    #[test]
    fn counts_match_formula_for_all_variants() {
        for preset in Preset::ALL {
            for (bi, attn) in [(false, false), (true, false), (false, true)] {
                let mut c = cfg(preset, 9, 4, 5, 3);
                c.bidirectional_first_layer = bi;
                c.use_attention = attn;
                if c.validate().is_err() {
                    continue;
                }
                let m: LanguageModel = build_model(c.clone(), vocab(9), &mut RngState::new(1)).unwrap();
                assert_eq!(m.parameter_count(), expected_count(&c), "{c:?}");
            }
        }
    }

    #[test]
    fn embedding_only_count_and_dropout_free() {
        let e = ParamTensor::<f32>::zeros(&[10, 4]);
        assert_eq!(count_parameters([&e]), 40);
        // The stacked preset's dropout layer owns no parameters: changing the
        // rate leaves the count alone.
        let mut a = cfg(Preset::Stacked, 9, 4, 5, 3);
        let m1: LanguageModel = build_model(a.clone(), vocab(9), &mut RngState::new(0)).unwrap();
        a.dropout_rate = 0.5;
        let m2: LanguageModel = build_model(a, vocab(9), &mut RngState::new(0)).unwrap();
        assert_eq!(m1.parameter_count(), m2.parameter_count());
    }

    #[test]
    fn invalid_configs() {
        let mut c = cfg(Preset::Stacked, 9, 4, 5, 3);
        c.dropout_rate = 1.0;
        assert!(matches!(LanguageModel::<f32>::zeros(c, vocab(9)), Err(Error::InvalidConfig(_))));
        let mut c = cfg(Preset::Simple, 9, 4, 5, 3);
        c.use_attention = true;
        assert!(c.validate().is_err());
        assert!(cfg(Preset::Simple, 2, 4, 5, 3).validate().is_err());
        assert!(cfg(Preset::Simple, 9, 0, 5, 3).validate().is_err());
        assert!(LanguageModel::<f32>::zeros(cfg(Preset::Simple, 9, 4, 5, 3), vocab(8)).is_err());
    }

    #[test]
    fn deterministic_init_with_forget_bias() {
        let c = cfg(Preset::Simple, 7, 3, 4, 2);
        let a: LanguageModel = build_model(c.clone(), vocab(7), &mut RngState::new(5)).unwrap();
        let b: LanguageModel = build_model(c, vocab(7), &mut RngState::new(5)).unwrap();
        assert_eq!(a, b);
        let (_, bias) = &a.named_params()[3];
        assert_eq!(bias.value.data(), &[0., 0., 0., 0., 1., 1., 1., 1., 0., 0., 0., 0., 0., 0., 0., 0.]);
    }

    #[test]
    fn predictions_are_distributions() {
        for preset in Preset::ALL {
            let m: LanguageModel = build_model(cfg(preset, 8, 3, 4, 3), vocab(8), &mut RngState::new(2)).unwrap();
            let mut rng = RngState::new(3);
            for _ in 0..10 {
                let ctx: Vec<usize> = (0..3).map(|_| (rng.next_u64() % 8) as usize).collect();
                let p = m.predict_next_distribution(&ctx).unwrap();
                let sum: f32 = p.data().iter().sum();
                assert!((sum - 1.0).abs() < 1e-6);
                assert!(p.data().iter().all(|&x| x > 0.0 && x < 1.0));
                assert_eq!(p, m.predict_next_distribution(&ctx).unwrap());
            }
        }
    }

    #[test]
    fn zero_output_layer_is_uniform() {
        let mut m: LanguageModel = build_model(cfg(Preset::Stacked, 8, 3, 4, 3), vocab(8), &mut RngState::new(2)).unwrap();
        m.zero_output_layer();
        let p = m.predict_next_distribution(&[0, 2, 5]).unwrap();
        assert!(p.data().iter().all(|&x| (x - 0.125).abs() < 1e-7));
    }

    #[test]
    fn wrong_context_length() {
        let m: LanguageModel = build_model(cfg(Preset::Simple, 8, 3, 4, 3), vocab(8), &mut RngState::new(2)).unwrap();
        assert!(matches!(m.predict_next_distribution(&[2, 3]), Err(Error::Shape(_))));
        assert!(matches!(m.predict_next_distribution(&[2, 3, 9]), Err(Error::Index { .. })));
    }
}
