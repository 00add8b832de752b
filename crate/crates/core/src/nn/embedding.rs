use crate::error::{Error, Result};
use crate::nn::tensor::{Float, ParamTensor, Tensor};

/// Row lookup `[T×d]` from a `[V×d]` table.
pub fn embedding_forward<T: Float>(ids: &[usize], table: &ParamTensor<T>) -> Result<Tensor<T>> {
    let vocab = table.shape()[0];
    let dim = table.value.cols();
    if ids.is_empty() {
        return Err(Error::shape("embedding lookup of an empty id list"));
    }
    let mut out = Vec::with_capacity(ids.len() * dim);
    for &id in ids {
        if id >= vocab {
            return Err(Error::Index {
                index: id,
                size: vocab,
            });
        }
        out.extend_from_slice(table.value.row(id));
    }
    Tensor::from_vec(&[ids.len(), dim], out)
}

/// Scatter-adds `upstream` rows into the gradient rows selected by `ids`.
pub fn embedding_backward<T: Float>(
    ids: &[usize],
    upstream: &Tensor<T>,
    table: &mut ParamTensor<T>,
) -> Result<()> {
    let dim = table.value.cols();
    upstream.expect_shape(&[ids.len(), dim], "embedding upstream")?;
    let vocab = table.shape()[0];
    for (t, &id) in ids.iter().enumerate() {
        if id >= vocab {
            return Err(Error::Index {
                index: id,
                size: vocab,
            });
        }
        for (g, &u) in table.grad.row_mut(id).iter_mut().zip(upstream.row(t)) {
            *g += u;
        }
    }
    Ok(())
}
