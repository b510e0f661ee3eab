use super::{gemm, op, op_t, shape_err, Mode, NnError, Param, Real, Tensor, Visit};

/// `y = x·W + b` with `x` flattened to `batch × in_features`.
pub fn dense<T: Real>(x: &Tensor<T>, weights: &[T], bias: &[T]) -> Result<Tensor<T>, NnError> {
    let (b, d) = (x.batch(), x.item_len());
    let u = bias.len();
    if weights.len() != d * u {
        return Err(shape_err(format!(
            "dense weights {} != {d}x{u}",
            weights.len()
        )));
    }
    let mut out = vec![T::zero(); b * u];
    for row in out.chunks_mut(u.max(1)) {
        row.copy_from_slice(bias);
    }
    gemm(b, d, u, op(x.data()), op(weights), &mut out, true);
    Tensor::matrix(b, u, out)
}

/// Accumulates weight/bias gradients; returns the input gradient shaped like
/// `input_shape`.
pub fn dense_backward<T: Real>(
    x: &Tensor<T>,
    grad_out: &Tensor<T>,
    weights: &[T],
    weight_grad: &mut [T],
    bias_grad: &mut [T],
) -> Result<Tensor<T>, NnError> {
    let (b, d) = (x.batch(), x.item_len());
    let u = bias_grad.len();
    if grad_out.shape() != [b, 1, 1, u] || weights.len() != d * u {
        return Err(shape_err("dense backward shape"));
    }
    gemm(d, b, u, op_t(x.data()), op(grad_out.data()), weight_grad, true);
    for row in grad_out.data().chunks(u) {
        for (g, &v) in bias_grad.iter_mut().zip(row) {
            *g += v;
        }
    }
    let mut dx = Tensor::zeros(x.shape());
    gemm(b, u, d, op(grad_out.data()), op_t(weights), dx.data_mut(), false);
    Ok(dx)
}

#[derive(Debug, Clone)]
pub struct Dense<T> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    cache: Option<Tensor<T>>,
}

impl<T: Real> Dense<T> {
    pub fn new(inputs: usize, units: usize, weights: Vec<T>) -> Self {
        Self {
            weight: Param::new(vec![inputs, units], weights),
            bias: Param::filled(vec![units], T::zero()),
            cache: None,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn units(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        let y = dense(x, &self.weight.value, &self.bias.value)?;
        self.cache = (mode == Mode::Train).then(|| x.clone());
        Ok(y)
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let x = self.cache.take().ok_or(NnError::NoCache)?;
        dense_backward(
            &x,
            grad_out,
            &self.weight.value,
            &mut self.weight.grad,
            &mut self.bias.grad,
        )
    }
}

impl<T: Real> Visit<T> for Dense<T> {
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<T>)) {
        f(&format!("{prefix}.weight"), &mut self.weight);
        f(&format!("{prefix}.bias"), &mut self.bias);
    }
}
