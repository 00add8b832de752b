//! LSTM cell with full backpropagation through time.
//!
//! Gate rows are stacked in the order input, forget, cell-candidate, output:
//! rows `0..H` of `w_x`, `w_h` and `b` belong to the input gate, `H..2H` to the
//! forget gate and so on. Checkpoints depend on this layout.

use crate::error::{Error, Result};
use crate::nn::tensor::{matvec_acc, matvec_t_acc, outer_acc, sigmoid, Float, ParamTensor, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell<T = f32> {
    /// `[4H × D]`
    pub w_x: ParamTensor<T>,
    /// `[4H × H]`
    pub w_h: ParamTensor<T>,
    /// `[4H]`
    pub b: ParamTensor<T>,
}

#[derive(Debug, Clone)]
struct StepCache<T> {
    x: Vec<T>,
    h_prev: Vec<T>,
    c_prev: Vec<T>,
    i: Vec<T>,
    f: Vec<T>,
    g: Vec<T>,
    o: Vec<T>,
    tanh_c: Vec<T>,
    c: Vec<T>,
    h: Vec<T>,
}

/// Activations recorded by a caching forward pass.
#[derive(Debug, Clone, Default)]
pub struct LstmCache<T = f32> {
    steps: Vec<StepCache<T>>,
    return_sequences: bool,
}

impl<T: Float> LstmCache<T> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_h(&self) -> Option<&[T]> {
        self.steps.last().map(|s| s.h.as_slice())
    }

    pub fn final_c(&self) -> Option<&[T]> {
        self.steps.last().map(|s| s.c.as_slice())
    }
}

/// Gradients with respect to the inputs of a sequence pass.
#[derive(Debug, Clone)]
pub struct LstmInputGrads<T = f32> {
    /// `[T × D]`
    pub dx: Tensor<T>,
    pub dh0: Vec<T>,
    pub dc0: Vec<T>,
}

impl<T: Float> LstmCell<T> {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        LstmCell {
            w_x: ParamTensor::zeros(&[4 * hidden, input_dim]),
            w_h: ParamTensor::zeros(&[4 * hidden, hidden]),
            b: ParamTensor::zeros(&[4 * hidden]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_x.value.cols()
    }

    pub fn hidden(&self) -> usize {
        self.w_h.value.cols()
    }

    pub fn params(&self) -> [&ParamTensor<T>; 3] {
        [&self.w_x, &self.w_h, &self.b]
    }

    pub fn params_mut(&mut self) -> [&mut ParamTensor<T>; 3] {
        [&mut self.w_x, &mut self.w_h, &mut self.b]
    }

    fn check_layout(&self) -> Result<()> {
        let h = self.hidden();
        let d = self.input_dim();
        if self.w_x.shape() != [4 * h, d] || self.w_h.shape() != [4 * h, h] || self.b.shape() != [4 * h] {
            return Err(Error::shape(format!(
                "inconsistent LSTM params: w_x {:?}, w_h {:?}, b {:?}",
                self.w_x.shape(),
                self.w_h.shape(),
                self.b.shape()
            )));
        }
        Ok(())
    }

    fn step_cached(&self, x: &[T], h_prev: &[T], c_prev: &[T]) -> StepCache<T> {
        let h = self.hidden();
        let mut z = self.b.value.data().to_vec();
        matvec_acc(self.w_x.value.data(), self.input_dim(), x, &mut z);
        matvec_acc(self.w_h.value.data(), h, h_prev, &mut z);

        let i: Vec<T> = z[..h].iter().map(|&v| sigmoid(v)).collect();
        let f: Vec<T> = z[h..2 * h].iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<T> = z[2 * h..3 * h].iter().map(|&v| v.tanh()).collect();
        let o: Vec<T> = z[3 * h..].iter().map(|&v| sigmoid(v)).collect();
        let c: Vec<T> = (0..h).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<T> = c.iter().map(|v| v.tanh()).collect();
        let hh: Vec<T> = (0..h).map(|k| o[k] * tanh_c[k]).collect();
        StepCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            i,
            f,
            g,
            o,
            tanh_c,
            c,
            h: hh,
        }
    }

    /// One recurrence step; returns `(h_t, c_t)`.
    pub fn step(&self, x: &[T], h_prev: &[T], c_prev: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        self.check_layout()?;
        let h = self.hidden();
        if x.len() != self.input_dim() || h_prev.len() != h || c_prev.len() != h {
            return Err(Error::shape(format!(
                "lstm step: x {} (want {}), h {} / c {} (want {h})",
                x.len(),
                self.input_dim(),
                h_prev.len(),
                c_prev.len()
            )));
        }
        let s = self.step_cached(x, h_prev, c_prev);
        Ok((s.h, s.c))
    }

    /// Runs the sequence `x: [T×D]` from zero state.
    pub fn forward(&self, x: &Tensor<T>, return_sequences: bool) -> Result<(Tensor<T>, LstmCache<T>)> {
        let zero = vec![T::zero(); self.hidden()];
        self.forward_from(x, &zero, &zero, return_sequences)
    }

    /// Runs the sequence from the given initial state. Output is `[T×H]` when
    /// `return_sequences`, else the final hidden state `[H]`.
    pub fn forward_from(
        &self,
        x: &Tensor<T>,
        h0: &[T],
        c0: &[T],
        return_sequences: bool,
    ) -> Result<(Tensor<T>, LstmCache<T>)> {
        self.check_layout()?;
        let h = self.hidden();
        if x.shape().len() != 2 || x.cols() != self.input_dim() {
            return Err(Error::shape(format!(
                "lstm input: expected [T×{}], got {:?}",
                self.input_dim(),
                x.shape()
            )));
        }
        if h0.len() != h || c0.len() != h {
            return Err(Error::shape("lstm initial state size"));
        }
        let mut steps: Vec<StepCache<T>> = Vec::with_capacity(x.rows());
        for t in 0..x.rows() {
            let (hp, cp) = match steps.last() {
                Some(s) => (s.h.as_slice(), s.c.as_slice()),
                None => (h0, c0),
            };
            let s = self.step_cached(x.row(t), hp, cp);
            steps.push(s);
        }
        let out = if return_sequences {
            Tensor::from_vec(
                &[steps.len(), h],
                steps.iter().flat_map(|s| s.h.iter().copied()).collect(),
            )?
        } else {
            Tensor::vector(steps.last().expect("T >= 1").h.clone())
        };
        Ok((
            out,
            LstmCache {
                steps,
                return_sequences,
            },
        ))
    }

    /// Backpropagation through time. Accumulates parameter gradients and returns
    /// input and initial-state gradients.
    pub fn backward(&mut self, cache: &LstmCache<T>, upstream: &Tensor<T>) -> Result<LstmInputGrads<T>> {
        self.backward_with_state(cache, upstream, None, None)
    }

    /// As [`LstmCell::backward`], with extra gradient flowing into the final
    /// hidden and cell states (used when another layer consumes them).
    pub fn backward_with_state(
        &mut self,
        cache: &LstmCache<T>,
        upstream: &Tensor<T>,
        dh_final: Option<&[T]>,
        dc_final: Option<&[T]>,
    ) -> Result<LstmInputGrads<T>> {
        if cache.steps.is_empty() {
            return Err(Error::State("lstm backward called without a forward cache".into()));
        }
        let h = self.hidden();
        let d = self.input_dim();
        let steps = cache.steps.len();
        if cache.return_sequences {
            upstream.expect_shape(&[steps, h], "lstm upstream")?;
        } else {
            upstream.expect_shape(&[h], "lstm upstream")?;
        }

        let mut dx = vec![T::zero(); steps * d];
        let mut dh_next = dh_final.map_or_else(|| vec![T::zero(); h], <[T]>::to_vec);
        let mut dc_next = dc_final.map_or_else(|| vec![T::zero(); h], <[T]>::to_vec);
        let mut dz = vec![T::zero(); 4 * h];
        let one = T::one();

        for t in (0..steps).rev() {
            let s = &cache.steps[t];
            let up: &[T] = if cache.return_sequences {
                upstream.row(t)
            } else if t == steps - 1 {
                upstream.data()
            } else {
                &[]
            };
            for k in 0..h {
                let dh = dh_next[k] + up.get(k).copied().unwrap_or_else(T::zero);
                let d_o = dh * s.tanh_c[k];
                let dc = dc_next[k] + dh * s.o[k] * (one - s.tanh_c[k] * s.tanh_c[k]);
                let d_f = dc * s.c_prev[k];
                let d_i = dc * s.g[k];
                let d_g = dc * s.i[k];
                dc_next[k] = dc * s.f[k];
                dz[k] = d_i * s.i[k] * (one - s.i[k]);
                dz[h + k] = d_f * s.f[k] * (one - s.f[k]);
                dz[2 * h + k] = d_g * (one - s.g[k] * s.g[k]);
                dz[3 * h + k] = d_o * s.o[k] * (one - s.o[k]);
            }
            outer_acc(self.w_x.grad.data_mut(), &dz, &s.x);
            outer_acc(self.w_h.grad.data_mut(), &dz, &s.h_prev);
            for (g, &v) in self.b.grad.data_mut().iter_mut().zip(&dz) {
                *g += v;
            }
            matvec_t_acc(self.w_x.value.data(), d, &dz, &mut dx[t * d..(t + 1) * d]);
            dh_next.iter_mut().for_each(|v| *v = T::zero());
            matvec_t_acc(self.w_h.value.data(), h, &dz, &mut dh_next);
        }

        Ok(LstmInputGrads {
            dx: Tensor::from_vec(&[steps, d], dx)?,
            dh0: dh_next,
            dc0: dc_next,
        })
    }
}

/// Free-function form of [`LstmCell::step`].
pub fn lstm_step<T: Float>(
    x: &Tensor<T>,
    h_prev: &Tensor<T>,
    c_prev: &Tensor<T>,
    p: &LstmCell<T>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let (h, c) = p.step(x.data(), h_prev.data(), c_prev.data())?;
    Ok((Tensor::vector(h), Tensor::vector(c)))
}

pub fn lstm_forward<T: Float>(
    x: &Tensor<T>,
    p: &LstmCell<T>,
    return_sequences: bool,
) -> Result<(Tensor<T>, LstmCache<T>)> {
    p.forward(x, return_sequences)
}

pub fn lstm_backward<T: Float>(
    p: &mut LstmCell<T>,
    cache: &LstmCache<T>,
    upstream: &Tensor<T>,
) -> Result<LstmInputGrads<T>> {
    p.backward(cache, upstream)
}

/// Forward and time-reversed backward cells over the same input.
#[derive(Debug, Clone, PartialEq)]
pub struct Bidirectional<T = f32> {
    pub fwd: LstmCell<T>,
    pub bwd: LstmCell<T>,
}

#[derive(Debug, Clone, Default)]
pub struct BidirectionalCache<T = f32> {
    fwd: LstmCache<T>,
    bwd: LstmCache<T>,
    return_sequences: bool,
}

fn reverse_rows<T: Float>(x: &Tensor<T>) -> Tensor<T> {
    let rows: Vec<T> = (0..x.rows()).rev().flat_map(|t| x.row(t).iter().copied()).collect();
    Tensor::from_vec(x.shape(), rows).expect("same shape")
}

impl<T: Float> Bidirectional<T> {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Bidirectional {
            fwd: LstmCell::zeros(input_dim, hidden),
            bwd: LstmCell::zeros(input_dim, hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.fwd.hidden()
    }

    /// `[T×2H]` when `return_sequences`: row `t` is the forward state after
    /// position `t` followed by the backward state after reading positions
    /// `T−1..=t`. Otherwise `[2H]`: both directions' final states.
    pub fn forward(&self, x: &Tensor<T>, return_sequences: bool) -> Result<(Tensor<T>, BidirectionalCache<T>)> {
        if self.fwd.input_dim() != self.bwd.input_dim() || self.fwd.hidden() != self.bwd.hidden() {
            return Err(Error::shape("bidirectional cells disagree on D or H"));
        }
        let h = self.hidden();
        let (out_f, cache_f) = self.fwd.forward(x, true)?;
        let (out_b, cache_b) = self.bwd.forward(&reverse_rows(x), true)?;
        let steps = x.rows();
        let out = if return_sequences {
            let mut data = Vec::with_capacity(steps * 2 * h);
            for t in 0..steps {
                data.extend_from_slice(out_f.row(t));
                data.extend_from_slice(out_b.row(steps - 1 - t));
            }
            Tensor::from_vec(&[steps, 2 * h], data)?
        } else {
            let mut data = out_f.row(steps - 1).to_vec();
            data.extend_from_slice(out_b.row(steps - 1));
            Tensor::vector(data)
        };
        Ok((
            out,
            BidirectionalCache {
                fwd: cache_f,
                bwd: cache_b,
                return_sequences,
            },
        ))
    }

    pub fn backward(&mut self, cache: &BidirectionalCache<T>, upstream: &Tensor<T>) -> Result<Tensor<T>> {
        if cache.fwd.is_empty() {
            return Err(Error::State("bidirectional backward called without a forward cache".into()));
        }
        let h = self.hidden();
        let steps = cache.fwd.len();
        let mut up_f = Tensor::zeros(&[steps, h]);
        let mut up_b = Tensor::zeros(&[steps, h]);
        if cache.return_sequences {
            upstream.expect_shape(&[steps, 2 * h], "bidirectional upstream")?;
            for t in 0..steps {
                up_f.row_mut(t).copy_from_slice(&upstream.row(t)[..h]);
                up_b.row_mut(steps - 1 - t).copy_from_slice(&upstream.row(t)[h..]);
            }
        } else {
            upstream.expect_shape(&[2 * h], "bidirectional upstream")?;
            up_f.row_mut(steps - 1).copy_from_slice(&upstream.data()[..h]);
            up_b.row_mut(steps - 1).copy_from_slice(&upstream.data()[h..]);
        }
        let gf = self.fwd.backward(&cache.fwd, &up_f)?;
        let gb = self.bwd.backward(&cache.bwd, &up_b)?;
        let mut dx = gf.dx;
        let dxb = reverse_rows(&gb.dx);
        for (a, &b) in dx.data_mut().iter_mut().zip(dxb.data()) {
            *a += b;
        }
        Ok(dx)
    }
}

/// Free-function form of [`Bidirectional::forward`] with sequence output.
pub fn bidirectional_forward<T: Float>(
    x: &Tensor<T>,
    p_fwd: &LstmCell<T>,
    p_bwd: &LstmCell<T>,
) -> Result<Tensor<T>> {
    let bi = Bidirectional {
        fwd: p_fwd.clone(),
        bwd: p_bwd.clone(),
    };
    Ok(bi.forward(x, true)?.0)
}
