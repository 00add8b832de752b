use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::rng::RngState;
use crate::nn::tensor::{Float, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Infer,
}

pub(crate) fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::config(format!("dropout rate must be in [0, 1), got {rate}")));
    }
    Ok(())
}

/// Inverted dropout. Returns the output and the multiplicative mask that was
/// applied (all ones in inference mode).
pub fn dropout_forward<T: Float>(
    x: &Tensor<T>,
    rate: f64,
    mode: Mode,
    rng: &mut RngState,
) -> Result<(Tensor<T>, Vec<T>)> {
    check_rate(rate)?;
    if mode == Mode::Infer || rate == 0.0 {
        return Ok((x.clone(), vec![T::one(); x.len()]));
    }
    let keep = T::from_f64(1.0 / (1.0 - rate));
    let mask: Vec<T> = (0..x.len())
        .map(|_| if rng.next_f64() < rate { T::zero() } else { keep })
        .collect();
    Ok((apply_mask(x, &mask), mask))
}

/// Elementwise product with a previously drawn mask; also the backward pass.
pub fn apply_mask<T: Float>(x: &Tensor<T>, mask: &[T]) -> Tensor<T> {
    debug_assert_eq!(x.len(), mask.len());
    let data = x.data().iter().zip(mask).map(|(&v, &m)| v * m).collect();
    Tensor::from_vec(x.shape(), data).expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_is_identity() {
        let x = Tensor::vector(vec![1.0f32, -2.0, 3.5]);
        let mut rng = RngState::new(1);
        for mode in [Mode::Train, Mode::Infer] {
            let (y, _) = dropout_forward(&x, 0.0, mode, &mut rng).unwrap();
            assert_eq!(y, x);
        }
    }

    #[test]
    fn inference_is_bit_identical() {
        let x = Tensor::vector(vec![0.1f32, 0.2, f32::MIN_POSITIVE]);
        let (y, _) = dropout_forward(&x, 0.6, Mode::Infer, &mut RngState::new(0)).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn rate_one_rejected() {
        let x = Tensor::vector(vec![1.0f32]);
        assert!(matches!(
            dropout_forward(&x, 1.0, Mode::Train, &mut RngState::new(0)),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn train_mode_preserves_expectation() {
        let n = 100_000;
        let rate = 0.6;
        let x = Tensor::vector(vec![1.0f64; n]);
        let (y, _) = dropout_forward(&x, rate, Mode::Train, &mut RngState::new(9)).unwrap();
        let mean = y.data().iter().sum::<f64>() / n as f64;
        // Each output is 0 or 1/(1-p); variance p/(1-p) per element.
        let sigma = (rate / (1.0 - rate) / n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * sigma, "mean {mean}, sigma {sigma}");
    }
}
