//! Finite-difference drivers for every layer and every preset, run in f64.

use lexitutor::corpus::Vocabulary;
use lexitutor::model::{build_model, LanguageModel, ModelConfig, Preset};
use lexitutor::nn::attention::{dot_attention, dot_attention_backward};
use lexitutor::nn::dense::{Activation, Dense};
use lexitutor::nn::lstm::{Bidirectional, LstmCell};
use lexitutor::nn::{
    apply_mask, cross_entropy_loss, embedding_backward, embedding_forward, grad_check, softmax,
    softmax_cross_entropy_grad, GradCheckReport, ParamTensor, RngState, Tensor,
};

pub const EPS: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;

fn random_vec(n: usize, rng: &mut RngState, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.uniform(-scale, scale)).collect()
}

fn randomize(params: &mut [&mut ParamTensor<f64>], rng: &mut RngState) {
    for p in params {
        for v in p.value.data_mut() {
            *v = rng.uniform(-0.6, 0.6);
        }
    }
}

fn flatten(params: &[&ParamTensor<f64>]) -> Vec<f64> {
    params.iter().flat_map(|p| p.value.data().iter().copied()).collect()
}

fn flatten_grads(params: &[&ParamTensor<f64>]) -> Vec<f64> {
    params.iter().flat_map(|p| p.grad.data().iter().copied()).collect()
}

fn load(params: &mut [&mut ParamTensor<f64>], flat: &[f64]) {
    let mut it = flat.iter();
    for p in params {
        for v in p.value.data_mut() {
            *v = *it.next().unwrap();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// LSTM over a `steps × d` input, loss = ⟨r, output⟩; checks the three
/// parameter tensors and the input.
pub fn check_lstm(d: usize, h: usize, steps: usize, seq: bool, eps: f64, seed: u64, repeat_input: bool) -> GradCheckReport {
    let mut rng = RngState::new(seed);
    let mut cell = LstmCell::<f64>::zeros(d, h);
    randomize(&mut cell.params_mut(), &mut rng);
    let mut x = random_vec(steps * d, &mut rng, 1.0);
    if repeat_input {
        let first = x[..d].to_vec();
        for t in 1..steps {
            x[t * d..(t + 1) * d].copy_from_slice(&first);
        }
    }
    let r = random_vec(if seq { steps * h } else { h }, &mut rng, 1.0);
    let up_shape: Vec<usize> = if seq { vec![steps, h] } else { vec![h] };

    let xt = Tensor::from_vec(&[steps, d], x.clone()).unwrap();
    let (_, cache) = cell.forward(&xt, seq).unwrap();
    let g = cell
        .backward(&cache, &Tensor::from_vec(&up_shape, r.clone()).unwrap())
        .unwrap();
    let mut analytic = flatten_grads(&cell.params());
    analytic.extend_from_slice(g.dx.data());
    let mut point = flatten(&cell.params());
    point.extend_from_slice(&x);

    let n_params = point.len() - x.len();
    let mut probe = cell.clone();
    grad_check(
        &point,
        &analytic,
        |v| {
            load(&mut probe.params_mut(), &v[..n_params]);
            let xt = Tensor::from_vec(&[steps, d], v[n_params..].to_vec()).unwrap();
            dot(probe.forward(&xt, seq).unwrap().0.data(), &r)
        },
        eps,
        TOLERANCE,
    )
}

/// Initial-state gradients of an LSTM started from `(h0, c0)`.
pub fn check_lstm_initial_state(seed: u64) -> GradCheckReport {
    let (d, h, steps) = (3, 4, 3);
    let mut rng = RngState::new(seed);
    let mut cell = LstmCell::<f64>::zeros(d, h);
    randomize(&mut cell.params_mut(), &mut rng);
    let x = Tensor::from_vec(&[steps, d], random_vec(steps * d, &mut rng, 1.0)).unwrap();
    let state = random_vec(2 * h, &mut rng, 0.8);
    let r = random_vec(steps * h, &mut rng, 1.0);
    let (_, cache) = cell.forward_from(&x, &state[..h], &state[h..], true).unwrap();
    let g = cell.backward(&cache, &Tensor::from_vec(&[steps, h], r.clone()).unwrap()).unwrap();
    let mut analytic = g.dh0.clone();
    analytic.extend_from_slice(&g.dc0);
    grad_check(
        &state,
        &analytic,
        |s| dot(cell.forward_from(&x, &s[..h], &s[h..], true).unwrap().0.data(), &r),
        EPS,
        TOLERANCE,
    )
}

pub fn check_bidirectional(seq: bool, seed: u64) -> GradCheckReport {
    let (d, h, steps) = (3, 2, 3);
    let mut rng = RngState::new(seed);
    let mut bi = Bidirectional::<f64>::zeros(d, h);
    randomize(&mut bi.fwd.params_mut(), &mut rng);
    randomize(&mut bi.bwd.params_mut(), &mut rng);
    let x = random_vec(steps * d, &mut rng, 1.0);
    let r = random_vec(if seq { steps * 2 * h } else { 2 * h }, &mut rng, 1.0);
    let up_shape: Vec<usize> = if seq { vec![steps, 2 * h] } else { vec![2 * h] };
    let xt = Tensor::from_vec(&[steps, d], x.clone()).unwrap();
    let (_, cache) = bi.forward(&xt, seq).unwrap();
    let dx = bi.backward(&cache, &Tensor::from_vec(&up_shape, r.clone()).unwrap()).unwrap();

    let mut params: Vec<&ParamTensor<f64>> = bi.fwd.params().to_vec();
    params.extend(bi.bwd.params());
    let mut analytic = flatten_grads(&params);
    analytic.extend_from_slice(dx.data());
    let mut point = flatten(&params);
    point.extend_from_slice(&x);
    let n_params = point.len() - x.len();

    let mut probe = bi.clone();
    grad_check(
        &point,
        &analytic,
        |v| {
            let mut ps: Vec<&mut ParamTensor<f64>> = probe.fwd.params_mut().into_iter().collect();
            let [a, b, c] = probe.bwd.params_mut();
            ps.extend([a, b, c]);
            load(&mut ps, &v[..n_params]);
            let xt = Tensor::from_vec(&[steps, d], v[n_params..].to_vec()).unwrap();
            dot(probe.forward(&xt, seq).unwrap().0.data(), &r)
        },
        EPS,
        TOLERANCE,
    )
}

pub fn check_embedding(seed: u64) -> GradCheckReport {
    let mut rng = RngState::new(seed);
    let mut table = ParamTensor::new(Tensor::from_vec(&[5, 3], random_vec(15, &mut rng, 1.0)).unwrap());
    let ids = [2, 0, 2, 4];
    let r = random_vec(ids.len() * 3, &mut rng, 1.0);
    embedding_backward(&ids, &Tensor::from_vec(&[4, 3], r.clone()).unwrap(), &mut table).unwrap();
    let point = table.value.data().to_vec();
    grad_check(
        &point,
        table.grad.data(),
        |v| {
            let t = ParamTensor::new(Tensor::from_vec(&[5, 3], v.to_vec()).unwrap());
            dot(embedding_forward(&ids, &t).unwrap().data(), &r)
        },
        EPS,
        TOLERANCE,
    )
}

pub fn check_dense(activation: Activation, seed: u64) -> GradCheckReport {
    let (d, u) = (4, 3);
    let mut rng = RngState::new(seed);
    let mut layer = Dense::<f64>::zeros(d, u, activation);
    randomize(&mut [&mut layer.weight, &mut layer.bias], &mut rng);
    let x = random_vec(d, &mut rng, 1.0);
    let r = random_vec(u, &mut rng, 1.0);
    let (_, cache) = layer.forward(&Tensor::vector(x.clone())).unwrap();
    let dx = layer.backward(&cache, &Tensor::vector(r.clone())).unwrap();
    let mut analytic = flatten_grads(&[&layer.weight, &layer.bias]);
    analytic.extend_from_slice(dx.data());
    let mut point = flatten(&[&layer.weight, &layer.bias]);
    point.extend_from_slice(&x);
    let n_params = point.len() - d;
    let mut probe = layer.clone();
    grad_check(
        &point,
        &analytic,
        |v| {
            load(&mut [&mut probe.weight, &mut probe.bias], &v[..n_params]);
            dot(probe.forward(&Tensor::vector(v[n_params..].to_vec())).unwrap().0.data(), &r)
        },
        EPS,
        TOLERANCE,
    )
}

/// Dropout with a frozen mask is linear: gradient is `r ⊙ mask`.
pub fn check_dropout_fixed_mask(seed: u64) -> GradCheckReport {
    let mut rng = RngState::new(seed);
    let x = random_vec(12, &mut rng, 1.0);
    let mask: Vec<f64> = (0..12).map(|_| if rng.next_f64() < 0.6 { 0.0 } else { 2.5 }).collect();
    let r = random_vec(12, &mut rng, 1.0);
    let analytic = apply_mask(&Tensor::vector(r.clone()), &mask).into_data();
    grad_check(
        &x,
        &analytic,
        |v| dot(apply_mask(&Tensor::vector(v.to_vec()), &mask).data(), &r),
        EPS,
        TOLERANCE,
    )
}

pub fn check_softmax_cross_entropy(seed: u64) -> GradCheckReport {
    let mut rng = RngState::new(seed);
    let z = random_vec(7, &mut rng, 2.0);
    let target = 3;
    let probs = softmax(&Tensor::vector(z.clone())).unwrap();
    let analytic = softmax_cross_entropy_grad(&probs, target).into_data();
    grad_check(
        &z,
        &analytic,
        |v| cross_entropy_loss(&softmax(&Tensor::vector(v.to_vec())).unwrap(), target).unwrap().loss,
        EPS,
        TOLERANCE,
    )
}

pub fn check_attention(seed: u64) -> GradCheckReport {
    let (steps, h) = (4, 3);
    let mut rng = RngState::new(seed);
    let q = random_vec(h, &mut rng, 1.0);
    let mem = random_vec(steps * h, &mut rng, 1.0);
    let r = random_vec(h, &mut rng, 1.0);
    let (_, cache) = dot_attention(&Tensor::vector(q.clone()), &Tensor::from_vec(&[steps, h], mem.clone()).unwrap()).unwrap();
    let (dq, dmem) = dot_attention_backward(&cache, &Tensor::vector(r.clone())).unwrap();
    let mut analytic = dq.into_data();
    analytic.extend_from_slice(dmem.data());
    let mut point = q;
    point.extend_from_slice(&mem);
    grad_check(
        &point,
        &analytic,
        |v| {
            let q = Tensor::vector(v[..h].to_vec());
            let m = Tensor::from_vec(&[steps, h], v[h..].to_vec()).unwrap();
            dot(dot_attention(&q, &m).unwrap().0.data(), &r)
        },
        EPS,
        TOLERANCE,
    )
}

pub fn small_config(preset: Preset, vocab_size: usize, window: usize) -> ModelConfig {
    ModelConfig {
        preset,
        vocab_size,
        embed_dim: 4,
        hidden: 5,
        window,
        dropout_rate: 0.0,
        bidirectional_first_layer: false,
        use_attention: false,
    }
}

fn vocab(n: usize) -> Vocabulary {
    Vocabulary::from_words((2..n).map(|i| format!("w{i}"))).unwrap()
}

/// Cross-entropy of one window through the whole model, against
/// central differences over every parameter. With `dropout_seed`, dropout
/// runs in training mode with a mask regenerated from the same seed on
/// every evaluation.
pub fn check_model(cfg: ModelConfig, context: &[usize], target: usize, dropout_seed: Option<u64>, seed: u64) -> GradCheckReport {
    let mut model: LanguageModel<f64> = build_model(cfg.clone(), vocab(cfg.vocab_size), &mut RngState::new(seed)).unwrap();
    // Larger random weights than Glorot so every path carries signal.
    randomize(&mut model.params_mut(), &mut RngState::new(seed + 1));

    let loss_of = |m: &LanguageModel<f64>| {
        let mut rng = dropout_seed.map(RngState::new);
        let (logits, _) = m.forward(context, rng.as_mut()).unwrap();
        cross_entropy_loss(&softmax(&logits).unwrap(), target).unwrap().loss
    };

    model.zero_grad();
    let mut rng = dropout_seed.map(RngState::new);
    let (logits, trace) = model.forward(context, rng.as_mut()).unwrap();
    let probs = softmax(&logits).unwrap();
    model.backward(&trace, &softmax_cross_entropy_grad(&probs, target)).unwrap();

    let params: Vec<&ParamTensor<f64>> = model.named_params().into_iter().map(|(_, p)| p).collect();
    let analytic = flatten_grads(&params);
    let point = flatten(&params);
    let mut probe = model.clone();
    grad_check(
        &point,
        &analytic,
        |v| {
            load(&mut probe.params_mut(), v);
            loss_of(&probe)
        },
        EPS,
        TOLERANCE,
    )
}

/// Every layer-level check, by name.
pub fn layer_checks() -> Vec<(String, GradCheckReport)> {
    vec![
        ("embedding (duplicate ids)".into(), check_embedding(1)),
        ("lstm D=3 H=4 T=2 final state, eps=1e-3".into(), check_lstm(3, 4, 2, false, 1e-3, 2, false)),
        ("lstm D=3 H=4 T=2 sequence".into(), check_lstm(3, 4, 2, true, EPS, 3, false)),
        ("lstm repeated timestep inputs".into(), check_lstm(3, 4, 3, true, EPS, 4, true)),
        ("lstm initial state".into(), check_lstm_initial_state(5)),
        ("bidirectional sequence".into(), check_bidirectional(true, 6)),
        ("bidirectional final state".into(), check_bidirectional(false, 7)),
        ("dropout fixed mask".into(), check_dropout_fixed_mask(8)),
        ("dense relu".into(), check_dense(Activation::Relu, 9)),
        ("dense linear".into(), check_dense(Activation::None, 10)),
        ("softmax + cross-entropy".into(), check_softmax_cross_entropy(11)),
        ("dot attention".into(), check_attention(12)),
    ]
}

/// Every preset variant on downsized configs (V ≤ 10, d = 4, H = 5, W ≤ 4).
pub fn preset_checks() -> Vec<(String, GradCheckReport)> {
    let mut out = Vec::new();
    let ctx3 = [0, 3, 5];
    let ctx4 = [2, 6, 2, 9];

    out.push(("simple V=7 W=3".into(), check_model(small_config(Preset::Simple, 7, 3), &ctx3, 4, None, 20)));
    let mut c = small_config(Preset::Simple, 10, 4);
    c.bidirectional_first_layer = true;
    out.push(("simple bidirectional V=10 W=4".into(), check_model(c, &ctx4, 3, None, 21)));

    let mut c = small_config(Preset::Stacked, 7, 3);
    c.dropout_rate = 0.6;
    out.push(("stacked V=7 W=3 inference".into(), check_model(c.clone(), &ctx3, 2, None, 22)));
    out.push(("stacked V=7 W=3 fixed dropout mask".into(), check_model(c, &ctx3, 2, Some(99), 23)));
    let mut c = small_config(Preset::Stacked, 10, 4);
    c.bidirectional_first_layer = true;
    c.dropout_rate = 0.3;
    out.push(("stacked bidirectional V=10 W=4 fixed mask".into(), check_model(c, &ctx4, 8, Some(5), 24)));

    out.push(("encdec V=7 W=3".into(), check_model(small_config(Preset::Encdec, 7, 3), &ctx3, 6, None, 25)));
    let mut c = small_config(Preset::Encdec, 10, 4);
    c.use_attention = true;
    out.push(("encdec attention V=10 W=4".into(), check_model(c, &ctx4, 5, None, 26)));
    out
}
