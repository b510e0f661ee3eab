use super::{shape_err, NnError, Real, Tensor};

/// Row-wise softmax with max subtraction.
pub fn softmax<T: Real>(logits: &Tensor<T>) -> Tensor<T> {
    let k = logits.item_len();
    let mut out = logits.clone();
    for row in out.data_mut().chunks_mut(k.max(1)) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput<T> {
    /// Mean categorical cross-entropy over the batch.
    pub loss: T,
    pub probs: Tensor<T>,
    /// d loss / d logits = (probs − onehot) / batch.
    pub grad: Tensor<T>,
}

pub fn softmax_cross_entropy<T: Real>(logits: &Tensor<T>, onehot: &[T]) -> Result<LossOutput<T>, NnError> {
    let (b, k) = (logits.batch(), logits.item_len());
    if onehot.len() != b * k || b == 0 {
        return Err(shape_err("targets do not match logits"));
    }
    let tol = T::lit(1e-9);
    for row in onehot.chunks(k) {
        let sum: T = row.iter().copied().sum();
        if row.iter().any(|&v| v < T::zero() || !v.is_finite()) || (sum - T::one()).abs() > tol {
            return Err(NnError::InvalidOneHot);
        }
    }
    let probs = softmax(logits);
    let batch = T::from_usize(b).unwrap();
    let mut loss = T::zero();
    for (z, y) in logits.data().chunks(k).zip(onehot.chunks(k)) {
        let max = z.iter().copied().fold(T::neg_infinity(), T::max);
        let log_sum = z.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
        for (&zi, &yi) in z.iter().zip(y) {
            if yi > T::zero() {
                loss -= yi * (zi - max - log_sum);
            }
        }
    }
    let mut grad = probs.clone();
    for (g, &y) in grad.data_mut().iter_mut().zip(onehot) {
        *g = (*g - y) / batch;
    }
    Ok(LossOutput {
        loss: loss / batch,
        probs,
        grad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits() {
        let z = Tensor::<f64>::matrix(1, 2, vec![0.0, 0.0]).unwrap();
        let out = softmax_cross_entropy(&z, &[1.0, 0.0]).unwrap();
        assert_eq!(out.probs.data(), &[0.5, 0.5]);
        assert!((out.loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let z = Tensor::<f64>::matrix(1, 2, vec![1000.0, 0.0]).unwrap();
        let out = softmax_cross_entropy(&z, &[1.0, 0.0]).unwrap();
        assert_eq!(out.probs.data()[0], 1.0);
        assert!(out.probs.data()[1] < 1e-300);
        assert_eq!(out.loss, 0.0);
        let wrong = softmax_cross_entropy(&z, &[0.0, 1.0]).unwrap();
        assert!((wrong.loss - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn rows_sum_to_one() {
        let z = Tensor::<f64>::matrix(3, 2, vec![0.3, -1.2, 5.0, 2.0, -7.0, 0.1]).unwrap();
        let p = softmax(&z);
        for row in p.data().chunks(2) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_targets() {
        let z = Tensor::<f64>::matrix(1, 2, vec![0.0, 0.0]).unwrap();
        assert_eq!(
            softmax_cross_entropy(&z, &[1.0, 1.0]).unwrap_err(),
            NnError::InvalidOneHot
        );
        assert!(softmax_cross_entropy(&z, &[1.0]).is_err());
    }
}
