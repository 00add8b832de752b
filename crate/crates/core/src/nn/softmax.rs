use crate::error::{Error, Result};
use crate::nn::tensor::{Float, Tensor};

/// Probability floor applied before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Max-subtracted softmax over a vector of logits.
pub fn softmax<T: Float>(z: &Tensor<T>) -> Result<Tensor<T>> {
    if z.data().iter().any(|v| v.is_nan()) {
        return Err(Error::Numeric("NaN in softmax input".into()));
    }
    let max = z.data().iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return Err(Error::Numeric("non-finite softmax input".into()));
    }
    let exps: Vec<T> = z.data().iter().map(|&v| (v - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    Tensor::from_vec(z.shape(), exps.into_iter().map(|e| e / sum).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossEntropy {
    pub loss: f64,
    /// The target probability was below [`PROB_FLOOR`] and was clamped.
    pub clamped: bool,
}

pub fn cross_entropy_loss<T: Float>(probs: &Tensor<T>, target: usize) -> Result<CrossEntropy> {
    let p = probs
        .data()
        .get(target)
        .ok_or(Error::Index {
            index: target,
            size: probs.len(),
        })?
        .as_f64();
    let clamped = p < PROB_FLOOR;
    Ok(CrossEntropy {
        loss: -p.max(PROB_FLOOR).ln(),
        clamped,
    })
}

/// Gradient of softmax + cross-entropy with respect to the logits.
pub fn softmax_cross_entropy_grad<T: Float>(probs: &Tensor<T>, target: usize) -> Tensor<T> {
    let mut g = probs.clone();
    g.data_mut()[target] = g.data()[target] - T::one();
    g
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax<T: Float>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn symmetric_inputs() {
        let p = softmax(&Tensor::vector(vec![0.0f64, 0.0])).unwrap();
        assert!(close(p.data(), &[0.5, 0.5]));
        let p = softmax(&Tensor::vector(vec![1000.0f64, 1000.0])).unwrap();
        assert!(close(p.data(), &[0.5, 0.5]));
        let p = softmax(&Tensor::vector(vec![1000.0f32, 1000.0])).unwrap();
        assert_eq!(p.data(), &[0.5, 0.5]);
    }

    #[test]
    fn analytic_case() {
        let p = softmax(&Tensor::vector(vec![1.0f64.ln(), 3.0f64.ln()])).unwrap();
        assert!(close(p.data(), &[0.25, 0.75]));
    }

    #[test]
    fn nan_rejected() {
        assert!(matches!(
            softmax(&Tensor::vector(vec![0.0f32, f32::NAN])),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn loss_values() {
        let p = Tensor::vector(vec![0.0f64, 1.0]);
        assert_eq!(cross_entropy_loss(&p, 1).unwrap().loss, 0.0);
        let p = Tensor::vector(vec![0.5f64, 0.5]);
        assert!((cross_entropy_loss(&p, 0).unwrap().loss - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_is_clamped() {
        let p = Tensor::vector(vec![0.0f32, 1.0]);
        let ce = cross_entropy_loss(&p, 0).unwrap();
        assert!(ce.clamped);
        assert!((ce.loss - (-PROB_FLOOR.ln())).abs() < 1e-9);
    }

    #[test]
    fn argmax_ties_to_lowest() {
        assert_eq!(argmax(&[0.25f32, 0.25, 0.25, 0.25]), 0);
        assert_eq!(argmax(&[0.1f32, 0.4, 0.4, 0.1]), 1);
    }

    #[test]
    fn logit_gradient_matches_finite_differences() {
        let z = [0.3f64, -1.2, 0.8, 0.1];
        let target = 2;
        let loss = |z: &[f64]| {
            let p = softmax(&Tensor::vector(z.to_vec())).unwrap();
            cross_entropy_loss(&p, target).unwrap().loss
        };
        let p = softmax(&Tensor::vector(z.to_vec())).unwrap();
        let g = softmax_cross_entropy_grad(&p, target);
        let eps = 1e-5;
        for k in 0..4 {
            let mut zp = z;
            let mut zm = z;
            zp[k] += eps;
            zm[k] -= eps;
            let num = (loss(&zp) - loss(&zm)) / (2.0 * eps);
            let a = g.data()[k];
            assert!((num - a).abs() / num.abs().max(a.abs()) < 1e-4);
        }
    }
}
