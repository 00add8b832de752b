use crate::error::{Error, Result};
use crate::nn::softmax::softmax;
use crate::nn::tensor::{Float, Tensor};

#[derive(Debug, Clone)]
pub struct AttentionCache<T = f32> {
    query: Vec<T>,
    memory: Tensor<T>,
    weights: Vec<T>,
}

/// Dot-product attention where the memory rows serve as both keys and values.
/// Returns `Σ_t softmax(memory · query)_t · memory_t`.
pub fn dot_attention<T: Float>(query: &Tensor<T>, memory: &Tensor<T>) -> Result<(Tensor<T>, AttentionCache<T>)> {
    let h = query.len();
    if memory.shape().len() != 2 || memory.cols() != h {
        return Err(Error::shape(format!(
            "attention: query [{h}] vs memory {:?}",
            memory.shape()
        )));
    }
    let scores: Vec<T> = (0..memory.rows())
        .map(|t| memory.row(t).iter().zip(query.data()).map(|(&k, &q)| k * q).sum())
        .collect();
    let weights = softmax(&Tensor::vector(scores))?.into_data();
    let mut out = vec![T::zero(); h];
    for (t, &w) in weights.iter().enumerate() {
        for (o, &v) in out.iter_mut().zip(memory.row(t)) {
            *o += w * v;
        }
    }
    Ok((
        Tensor::vector(out),
        AttentionCache {
            query: query.data().to_vec(),
            memory: memory.clone(),
            weights,
        },
    ))
}

/// Returns `(d_query, d_memory)`.
pub fn dot_attention_backward<T: Float>(cache: &AttentionCache<T>, upstream: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
    let h = cache.query.len();
    upstream.expect_shape(&[h], "attention upstream")?;
    let mem = &cache.memory;
    let steps = mem.rows();
    let up = upstream.data();

    // d weight_t = up · v_t ; d score = w ⊙ (dw − Σ w dw)
    let dw: Vec<T> = (0..steps).map(|t| mem.row(t).iter().zip(up).map(|(&v, &g)| v * g).sum()).collect();
    let mean: T = cache.weights.iter().zip(&dw).map(|(&w, &d)| w * d).sum();
    let ds: Vec<T> = cache.weights.iter().zip(&dw).map(|(&w, &d)| w * (d - mean)).collect();

    let mut dq = vec![T::zero(); h];
    let mut dmem = Tensor::zeros(mem.shape());
    for t in 0..steps {
        let w = cache.weights[t];
        let row = dmem.row_mut(t);
        for k in 0..h {
            // value path + key path
            row[k] = w * up[k] + ds[t] * cache.query[k];
            dq[k] += ds[t] * mem.row(t)[k];
        }
    }
    Ok((Tensor::vector(dq), dmem))
}
