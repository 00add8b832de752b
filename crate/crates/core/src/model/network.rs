//! Layer stacks for the three presets, with whole-network forward and backward.

use crate::error::{Error, Result};
use crate::model::{ModelConfig, Preset};
use crate::nn::attention::{dot_attention, dot_attention_backward, AttentionCache};
use crate::nn::dense::{Activation, Dense, DenseCache};
use crate::nn::dropout::{apply_mask, dropout_forward, Mode};
use crate::nn::embedding::{embedding_backward, embedding_forward};
use crate::nn::lstm::{Bidirectional, BidirectionalCache, LstmCache, LstmCell};
use crate::nn::{Float, ParamTensor, RngState, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Recurrent<T> {
    Uni(LstmCell<T>),
    Bi(Bidirectional<T>),
}

#[derive(Debug, Clone)]
pub(crate) enum RecurrentCache<T> {
    Uni(LstmCache<T>),
    Bi(BidirectionalCache<T>),
}

impl<T: Float> Recurrent<T> {
    fn new(input_dim: usize, hidden: usize, bidirectional: bool) -> Self {
        if bidirectional {
            Recurrent::Bi(Bidirectional::zeros(input_dim, hidden))
        } else {
            Recurrent::Uni(LstmCell::zeros(input_dim, hidden))
        }
    }

    fn output_dim(&self) -> usize {
        match self {
            Recurrent::Uni(c) => c.hidden(),
            Recurrent::Bi(b) => 2 * b.hidden(),
        }
    }

    fn forward(&self, x: &Tensor<T>, seq: bool) -> Result<(Tensor<T>, RecurrentCache<T>)> {
        Ok(match self {
            Recurrent::Uni(c) => {
                let (y, cache) = c.forward(x, seq)?;
                (y, RecurrentCache::Uni(cache))
            }
            Recurrent::Bi(b) => {
                let (y, cache) = b.forward(x, seq)?;
                (y, RecurrentCache::Bi(cache))
            }
        })
    }

    fn backward(&mut self, cache: &RecurrentCache<T>, upstream: &Tensor<T>) -> Result<Tensor<T>> {
        match (self, cache) {
            (Recurrent::Uni(c), RecurrentCache::Uni(k)) => Ok(c.backward(k, upstream)?.dx),
            (Recurrent::Bi(b), RecurrentCache::Bi(k)) => b.backward(k, upstream),
            _ => Err(Error::State("recurrent cache does not match layer".into())),
        }
    }

    fn named<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a ParamTensor<T>)>) {
        match self {
            Recurrent::Uni(c) => named_cell(prefix, c, out),
            Recurrent::Bi(b) => {
                named_cell(&format!("{prefix}_fwd"), &b.fwd, out);
                named_cell(&format!("{prefix}_bwd"), &b.bwd, out);
            }
        }
    }

    fn params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut ParamTensor<T>>) {
        match self {
            Recurrent::Uni(c) => out.extend(c.params_mut()),
            Recurrent::Bi(b) => {
                out.extend(b.fwd.params_mut());
                out.extend(b.bwd.params_mut());
            }
        }
    }
}

fn named_cell<'a, T: Float>(prefix: &str, c: &'a LstmCell<T>, out: &mut Vec<(String, &'a ParamTensor<T>)>) {
    out.push((format!("{prefix}.w_x"), &c.w_x));
    out.push((format!("{prefix}.w_h"), &c.w_h));
    out.push((format!("{prefix}.b"), &c.b));
}

fn named_dense<'a, T: Float>(prefix: &str, d: &'a Dense<T>, out: &mut Vec<(String, &'a ParamTensor<T>)>) {
    out.push((format!("{prefix}.weight"), &d.weight));
    out.push((format!("{prefix}.bias"), &d.bias));
}

/// Embed → LSTM → Dense(V)
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SimpleNet<T> {
    embedding: ParamTensor<T>,
    lstm: Recurrent<T>,
    output: Dense<T>,
}

/// Embed → LSTM(seq) → Dropout → LSTM → Dense(H, relu) → Dense(V)
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct StackedNet<T> {
    embedding: ParamTensor<T>,
    lstm1: Recurrent<T>,
    dropout_rate: f64,
    lstm2: LstmCell<T>,
    hidden: Dense<T>,
    output: Dense<T>,
}

/// Embed → encoder LSTM over the window → one decoder step on the last
/// token from the encoder's final state → optional attention over the
/// encoder outputs → Dense(V)
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct EncDecNet<T> {
    embedding: ParamTensor<T>,
    encoder: LstmCell<T>,
    decoder: LstmCell<T>,
    attention: bool,
    output: Dense<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Network<T> {
    Simple(SimpleNet<T>),
    Stacked(StackedNet<T>),
    EncDec(EncDecNet<T>),
}

/// Forward activations needed to backpropagate one window.
#[derive(Debug, Clone)]
pub struct Trace<T = f32>(TraceKind<T>);

#[derive(Debug, Clone)]
enum TraceKind<T> {
    Simple {
        ids: Vec<usize>,
        rec: RecurrentCache<T>,
        out: DenseCache<T>,
    },
    Stacked {
        ids: Vec<usize>,
        rec1: RecurrentCache<T>,
        mask: Vec<T>,
        lstm2: LstmCache<T>,
        hidden: DenseCache<T>,
        out: DenseCache<T>,
    },
    EncDec {
        ids: Vec<usize>,
        enc: LstmCache<T>,
        dec: LstmCache<T>,
        attn: Option<AttentionCache<T>>,
        out: DenseCache<T>,
    },
}

fn dropout_or_identity<T: Float>(x: &Tensor<T>, rate: f64, rng: Option<&mut RngState>) -> Result<(Tensor<T>, Vec<T>)> {
    match rng {
        Some(rng) => dropout_forward(x, rate, Mode::Train, rng),
        None => dropout_forward(x, rate, Mode::Infer, &mut RngState::new(0)),
    }
}

impl<T: Float> Network<T> {
    /// Zero-initialized layers laid out for `cfg`.
    pub(crate) fn zeros(cfg: &ModelConfig) -> Self {
        let (v, d, h) = (cfg.vocab_size, cfg.embed_dim, cfg.hidden);
        let embedding = ParamTensor::zeros(&[v, d]);
        match cfg.preset {
            Preset::Simple => {
                let lstm = Recurrent::new(d, h, cfg.bidirectional_first_layer);
                let out_dim = lstm.output_dim();
                Network::Simple(SimpleNet {
                    embedding,
                    lstm,
                    output: Dense::zeros(out_dim, v, Activation::None),
                })
            }
            Preset::Stacked => {
                let lstm1 = Recurrent::new(d, h, cfg.bidirectional_first_layer);
                let lstm2 = LstmCell::zeros(lstm1.output_dim(), h);
                Network::Stacked(StackedNet {
                    embedding,
                    lstm1,
                    dropout_rate: cfg.dropout_rate,
                    lstm2,
                    hidden: Dense::zeros(h, h, Activation::Relu),
                    output: Dense::zeros(h, v, Activation::None),
                })
            }
            Preset::Encdec => Network::EncDec(EncDecNet {
                embedding,
                encoder: LstmCell::zeros(d, h),
                decoder: LstmCell::zeros(d, h),
                attention: cfg.use_attention,
                output: Dense::zeros(if cfg.use_attention { 2 * h } else { h }, v, Activation::None),
            }),
        }
    }

    /// Parameters with their manifest names, in checkpoint order.
    pub(crate) fn named_params(&self) -> Vec<(String, &ParamTensor<T>)> {
        let mut out = Vec::new();
        match self {
            Network::Simple(n) => {
                out.push(("embedding.weight".to_string(), &n.embedding));
                n.lstm.named("lstm", &mut out);
                named_dense("output", &n.output, &mut out);
            }
            Network::Stacked(n) => {
                out.push(("embedding.weight".to_string(), &n.embedding));
                n.lstm1.named("lstm1", &mut out);
                named_cell("lstm2", &n.lstm2, &mut out);
                named_dense("hidden", &n.hidden, &mut out);
                named_dense("output", &n.output, &mut out);
            }
            Network::EncDec(n) => {
                out.push(("embedding.weight".to_string(), &n.embedding));
                named_cell("encoder", &n.encoder, &mut out);
                named_cell("decoder", &n.decoder, &mut out);
                named_dense("output", &n.output, &mut out);
            }
        }
        out
    }

    /// Same order as [`Network::named_params`].
    pub(crate) fn params_mut(&mut self) -> Vec<&mut ParamTensor<T>> {
        let mut out = Vec::new();
        match self {
            Network::Simple(n) => {
                out.push(&mut n.embedding);
                n.lstm.params_mut(&mut out);
                out.push(&mut n.output.weight);
                out.push(&mut n.output.bias);
            }
            Network::Stacked(n) => {
                out.push(&mut n.embedding);
                n.lstm1.params_mut(&mut out);
                out.extend(n.lstm2.params_mut());
                out.push(&mut n.hidden.weight);
                out.push(&mut n.hidden.bias);
                out.push(&mut n.output.weight);
                out.push(&mut n.output.bias);
            }
            Network::EncDec(n) => {
                out.push(&mut n.embedding);
                out.extend(n.encoder.params_mut());
                out.extend(n.decoder.params_mut());
                out.push(&mut n.output.weight);
                out.push(&mut n.output.bias);
            }
        }
        out
    }

    pub(crate) fn output_layer_mut(&mut self) -> &mut Dense<T> {
        match self {
            Network::Simple(n) => &mut n.output,
            Network::Stacked(n) => &mut n.output,
            Network::EncDec(n) => &mut n.output,
        }
    }

    /// Logits for one context window. Dropout is active only when `rng` is given.
    pub(crate) fn forward(&self, ids: &[usize], rng: Option<&mut RngState>) -> Result<(Tensor<T>, Trace<T>)> {
        match self {
            Network::Simple(n) => {
                let emb = embedding_forward(ids, &n.embedding)?;
                let (h, rec) = n.lstm.forward(&emb, false)?;
                let (logits, out) = n.output.forward(&h)?;
                Ok((
                    logits,
                    Trace(TraceKind::Simple {
                        ids: ids.to_vec(),
                        rec,
                        out,
                    }),
                ))
            }
            Network::Stacked(n) => {
                let emb = embedding_forward(ids, &n.embedding)?;
                let (seq, rec1) = n.lstm1.forward(&emb, true)?;
                let (dropped, mask) = dropout_or_identity(&seq, n.dropout_rate, rng)?;
                let (h2, lstm2) = n.lstm2.forward(&dropped, false)?;
                let (a, hidden) = n.hidden.forward(&h2)?;
                let (logits, out) = n.output.forward(&a)?;
                Ok((
                    logits,
                    Trace(TraceKind::Stacked {
                        ids: ids.to_vec(),
                        rec1,
                        mask,
                        lstm2,
                        hidden,
                        out,
                    }),
                ))
            }
            Network::EncDec(n) => {
                let emb = embedding_forward(ids, &n.embedding)?;
                let (memory, enc) = n.encoder.forward(&emb, true)?;
                let last = Tensor::from_vec(&[1, emb.cols()], emb.row(emb.rows() - 1).to_vec())?;
                let h_enc = enc.final_h().expect("non-empty window");
                let c_enc = enc.final_c().expect("non-empty window");
                let (h_dec, dec) = n.decoder.forward_from(&last, h_enc, c_enc, false)?;
                let (features, attn) = if n.attention {
                    let (ctx, cache) = dot_attention(&h_dec, &memory)?;
                    let mut f = h_dec.into_data();
                    f.extend_from_slice(ctx.data());
                    (Tensor::vector(f), Some(cache))
                } else {
                    (h_dec, None)
                };
                let (logits, out) = n.output.forward(&features)?;
                Ok((
                    logits,
                    Trace(TraceKind::EncDec {
                        ids: ids.to_vec(),
                        enc,
                        dec,
                        attn,
                        out,
                    }),
                ))
            }
        }
    }

    /// Accumulates parameter gradients for `dlogits` through the recorded trace.
    pub(crate) fn backward(&mut self, trace: &Trace<T>, dlogits: &Tensor<T>) -> Result<()> {
        match (self, &trace.0) {
            (Network::Simple(n), TraceKind::Simple { ids, rec, out }) => {
                let dh = n.output.backward(out, dlogits)?;
                let demb = n.lstm.backward(rec, &dh)?;
                embedding_backward(ids, &demb, &mut n.embedding)
            }
            (
                Network::Stacked(n),
                TraceKind::Stacked {
                    ids,
                    rec1,
                    mask,
                    lstm2,
                    hidden,
                    out,
                },
            ) => {
                let da = n.output.backward(out, dlogits)?;
                let dh2 = n.hidden.backward(hidden, &da)?;
                let ddropped = n.lstm2.backward(lstm2, &dh2)?.dx;
                let dseq = apply_mask(&ddropped, mask);
                let demb = n.lstm1.backward(rec1, &dseq)?;
                embedding_backward(ids, &demb, &mut n.embedding)
            }
            (
                Network::EncDec(n),
                TraceKind::EncDec {
                    ids,
                    enc,
                    dec,
                    attn,
                    out,
                },
            ) => {
                let h = n.decoder.hidden();
                let dfeat = n.output.backward(out, dlogits)?;
                let (dh_dec, dmemory) = match attn {
                    Some(cache) => {
                        let dctx = Tensor::vector(dfeat.data()[h..].to_vec());
                        let (dq, dmem) = dot_attention_backward(cache, &dctx)?;
                        let dh: Vec<T> = dfeat.data()[..h].iter().zip(dq.data()).map(|(&a, &b)| a + b).collect();
                        (Tensor::vector(dh), dmem)
                    }
                    None => (dfeat, Tensor::zeros(&[ids.len(), h])),
                };
                let gd = n.decoder.backward(dec, &dh_dec)?;
                let ge = n.encoder.backward_with_state(enc, &dmemory, Some(&gd.dh0), Some(&gd.dc0))?;
                let mut demb = ge.dx;
                let last = ids.len() - 1;
                for (a, &b) in demb.row_mut(last).iter_mut().zip(gd.dx.row(0)) {
                    *a += b;
                }
                embedding_backward(ids, &demb, &mut n.embedding)
            }
            _ => Err(Error::State("trace does not match network preset".into())),
        }
    }

    pub(crate) fn cast<U: Float>(&self) -> Network<U> {
        fn cell<T: Float, U: Float>(c: &LstmCell<T>) -> LstmCell<U> {
            LstmCell {
                w_x: c.w_x.cast(),
                w_h: c.w_h.cast(),
                b: c.b.cast(),
            }
        }
        fn rec<T: Float, U: Float>(r: &Recurrent<T>) -> Recurrent<U> {
            match r {
                Recurrent::Uni(c) => Recurrent::Uni(cell(c)),
                Recurrent::Bi(b) => Recurrent::Bi(Bidirectional {
                    fwd: cell(&b.fwd),
                    bwd: cell(&b.bwd),
                }),
            }
        }
        fn dense<T: Float, U: Float>(d: &Dense<T>) -> Dense<U> {
            Dense {
                weight: d.weight.cast(),
                bias: d.bias.cast(),
                activation: d.activation,
            }
        }
        match self {
            Network::Simple(n) => Network::Simple(SimpleNet {
                embedding: n.embedding.cast(),
                lstm: rec(&n.lstm),
                output: dense(&n.output),
            }),
            Network::Stacked(n) => Network::Stacked(StackedNet {
                embedding: n.embedding.cast(),
                lstm1: rec(&n.lstm1),
                dropout_rate: n.dropout_rate,
                lstm2: cell(&n.lstm2),
                hidden: dense(&n.hidden),
                output: dense(&n.output),
            }),
            Network::EncDec(n) => Network::EncDec(EncDecNet {
                embedding: n.embedding.cast(),
                encoder: cell(&n.encoder),
                decoder: cell(&n.decoder),
                attention: n.attention,
                output: dense(&n.output),
            }),
        }
    }
}
