use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::tensor::{matvec_acc, matvec_t_acc, outer_acc, Float, ParamTensor, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    None,
}

/// Fully connected layer `activation(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T = f32> {
    /// `[U × D]`
    pub weight: ParamTensor<T>,
    /// `[U]`
    pub bias: ParamTensor<T>,
    pub activation: Activation,
}

#[derive(Debug, Clone, Default)]
pub struct DenseCache<T = f32> {
    x: Vec<T>,
    y: Vec<T>,
}

impl<T: Float> Dense<T> {
    pub fn zeros(input_dim: usize, units: usize, activation: Activation) -> Self {
        Dense {
            weight: ParamTensor::zeros(&[units, input_dim]),
            bias: ParamTensor::zeros(&[units]),
            activation,
        }
    }

    pub fn units(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn input_dim(&self) -> usize {
        self.weight.value.cols()
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, DenseCache<T>)> {
        let y = dense_forward(x, &self.weight, &self.bias, self.activation)?;
        let cache = DenseCache {
            x: x.data().to_vec(),
            y: y.data().to_vec(),
        };
        Ok((y, cache))
    }

    /// Accumulates weight and bias gradients; returns the input gradient.
    pub fn backward(&mut self, cache: &DenseCache<T>, upstream: &Tensor<T>) -> Result<Tensor<T>> {
        if cache.x.is_empty() {
            return Err(Error::State("dense backward called without a forward cache".into()));
        }
        upstream.expect_shape(&[self.units()], "dense upstream")?;
        let dz: Vec<T> = match self.activation {
            Activation::None => upstream.data().to_vec(),
            Activation::Relu => upstream
                .data()
                .iter()
                .zip(&cache.y)
                .map(|(&g, &y)| if y > T::zero() { g } else { T::zero() })
                .collect(),
        };
        outer_acc(self.weight.grad.data_mut(), &dz, &cache.x);
        for (g, &v) in self.bias.grad.data_mut().iter_mut().zip(&dz) {
            *g += v;
        }
        let mut dx = vec![T::zero(); self.input_dim()];
        matvec_t_acc(self.weight.value.data(), self.input_dim(), &dz, &mut dx);
        Ok(Tensor::vector(dx))
    }
}

pub fn dense_forward<T: Float>(
    x: &Tensor<T>,
    weight: &ParamTensor<T>,
    bias: &ParamTensor<T>,
    activation: Activation,
) -> Result<Tensor<T>> {
    let units = weight.shape()[0];
    let d = weight.value.cols();
    if x.len() != d || bias.shape() != [units] {
        return Err(Error::shape(format!(
            "dense: x has {} elements, W is {:?}, b is {:?}",
            x.len(),
            weight.shape(),
            bias.shape()
        )));
    }
    let mut y = bias.value.data().to_vec();
    matvec_acc(weight.value.data(), d, x.data(), &mut y);
    if activation == Activation::Relu {
        y.iter_mut().for_each(|v| *v = v.max(T::zero()));
    }
    Ok(Tensor::vector(y))
}
