use super::{shape_err, Buffer, Mode, NnError, Param, Real, Tensor, Visit};

pub const BN_EPS: f64 = 1e-5;
/// Weight kept on the old running statistic at each update.
pub const BN_MOMENTUM: f64 = 0.9;

/// Per-channel batch normalisation with learned scale and shift.
#[derive(Debug, Clone)]
pub struct BatchNorm<T> {
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Buffer<T>,
    pub running_var: Buffer<T>,
    pub eps: T,
    pub momentum: T,
    cache: Option<Cache<T>>,
}

#[derive(Debug, Clone)]
struct Cache<T> {
    x_hat: Vec<T>,
    inv_std: Vec<T>,
}

impl<T: Real> BatchNorm<T> {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: Param::filled(vec![channels], T::one()),
            beta: Param::filled(vec![channels], T::zero()),
            running_mean: Buffer {
                value: vec![T::zero(); channels],
                shape: vec![channels],
            },
            running_var: Buffer {
                value: vec![T::one(); channels],
                shape: vec![channels],
            },
            eps: T::lit(BN_EPS),
            momentum: T::lit(BN_MOMENTUM),
            cache: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        let c = self.channels();
        if x.channels() != c {
            return Err(shape_err(format!(
                "batchnorm expects {c} channels, got {}",
                x.channels()
            )));
        }
        let count = x.len() / c.max(1);
        let mut out = Tensor::zeros(x.shape());
        let (gamma, beta) = (&self.gamma.value, &self.beta.value);
        match mode {
            Mode::Eval => {
                let mean = &self.running_mean.value;
                let scale: Vec<T> = gamma
                    .iter()
                    .zip(&self.running_var.value)
                    .map(|(&g, &v)| g / (v + self.eps).sqrt())
                    .collect();
                for (o, xs) in out.data_mut().chunks_exact_mut(c).zip(x.data().chunks_exact(c)) {
                    for ((((o, &x), &m), &s), &b) in o.iter_mut().zip(xs).zip(mean).zip(&scale).zip(beta) {
                        *o = (x - m) * s + b;
                    }
                }
                self.cache = None;
            }
            Mode::Train => {
                if count < 2 {
                    return Err(NnError::BatchTooSmall(count));
                }
                let n = T::from_usize(count).unwrap();
                let mut mean = vec![T::zero(); c];
                for xs in x.data().chunks_exact(c) {
                    for (m, &x) in mean.iter_mut().zip(xs) {
                        *m += x;
                    }
                }
                mean.iter_mut().for_each(|m| *m = *m / n);
                let mut var = vec![T::zero(); c];
                for xs in x.data().chunks_exact(c) {
                    for ((v, &x), &m) in var.iter_mut().zip(xs).zip(&mean) {
                        let d = x - m;
                        *v += d * d;
                    }
                }
                var.iter_mut().for_each(|v| *v = *v / n);
                let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + self.eps).sqrt()).collect();

                let mut x_hat = vec![T::zero(); x.len()];
                for ((o, h), xs) in out
                    .data_mut()
                    .chunks_exact_mut(c)
                    .zip(x_hat.chunks_exact_mut(c))
                    .zip(x.data().chunks_exact(c))
                {
                    let params = mean.iter().zip(&inv_std).zip(gamma.iter().zip(beta));
                    for (((o, h), &x), ((&m, &is), (&g, &b))) in o.iter_mut().zip(h.iter_mut()).zip(xs).zip(params) {
                        *h = (x - m) * is;
                        *o = g * *h + b;
                    }
                }

                let m = self.momentum;
                let unbias = n / (n - T::one());
                for j in 0..c {
                    self.running_mean.value[j] = m * self.running_mean.value[j] + (T::one() - m) * mean[j];
                    self.running_var.value[j] =
                        m * self.running_var.value[j] + (T::one() - m) * var[j] * unbias;
                }
                self.cache = Some(Cache { x_hat, inv_std });
            }
        }
        Ok(out)
    }

    /// Accumulates γ/β gradients and returns the input gradient.
    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let cache = self.cache.take().ok_or(NnError::NoCache)?;
        let c = self.channels();
        if grad_out.len() != cache.x_hat.len() || grad_out.channels() != c {
            return Err(shape_err("batchnorm backward shape"));
        }
        let n = T::from_usize(grad_out.len() / c).unwrap();
        let mut dbeta = vec![T::zero(); c];
        let mut dgamma = vec![T::zero(); c];
        for (dy, h) in grad_out.data().chunks_exact(c).zip(cache.x_hat.chunks_exact(c)) {
            for (((db, dg), &dy), &h) in dbeta.iter_mut().zip(dgamma.iter_mut()).zip(dy).zip(h) {
                *db += dy;
                *dg += dy * h;
            }
        }
        let k: Vec<T> = self
            .gamma
            .value
            .iter()
            .zip(&cache.inv_std)
            .map(|(&g, &is)| g * is / n)
            .collect();
        let mut dx = Tensor::zeros(grad_out.shape());
        for ((o, dy), h) in dx
            .data_mut()
            .chunks_exact_mut(c)
            .zip(grad_out.data().chunks_exact(c))
            .zip(cache.x_hat.chunks_exact(c))
        {
            let per = k.iter().zip(&dbeta).zip(&dgamma);
            for (((o, &dy), &h), ((&k, &db), &dg)) in o.iter_mut().zip(dy).zip(h).zip(per) {
                *o = k * (n * dy - db - h * dg);
            }
        }
        for j in 0..c {
            self.beta.grad[j] += dbeta[j];
            self.gamma.grad[j] += dgamma[j];
        }
        Ok(dx)
    }
}
impl<T: Real> Visit<T> for BatchNorm<T> {
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<T>)) {
        f(&format!("{prefix}.gamma"), &mut self.gamma);
        f(&format!("{prefix}.beta"), &mut self.beta);
    }

    fn visit_buffers(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Buffer<T>)) {
        f(&format!("{prefix}.running_mean"), &mut self.running_mean);
        f(&format!("{prefix}.running_var"), &mut self.running_var);
    }
}
