use super::{shape_err, Mode, NnError, Real, Tensor};

fn pooled_size(n: usize, k: usize, stride: usize, pad: usize) -> Result<usize, NnError> {
    if k == 0 || stride == 0 || n + 2 * pad < k || pad >= k {
        return Err(shape_err(format!(
            "pool window {k} stride {stride} pad {pad} does not fit size {n}"
        )));
    }
    Ok((n + 2 * pad - k) / stride + 1)
}

/// Window maximum. Padding never wins. Ties go to the first element in
/// row-major window order. Returns the flat input index chosen per output.
pub fn maxpool<T: Real>(
    x: &Tensor<T>,
    k: usize,
    stride: usize,
    pad: usize,
) -> Result<(Tensor<T>, Vec<usize>), NnError> {
    let [b, h, w, c] = x.shape();
    let oh = pooled_size(h, k, stride, pad)?;
    let ow = pooled_size(w, k, stride, pad)?;
    let mut out = Tensor::zeros([b, oh, ow, c]);
    let mut argmax = vec![0usize; out.len()];
    let data = x.data();
    let od = out.data_mut();
    let mut taken = vec![false; c];
    for n in 0..b {
        for oy in 0..oh {
            for ox in 0..ow {
                let o = ((n * oh + oy) * ow + ox) * c;
                let (best, best_at) = (&mut od[o..o + c], &mut argmax[o..o + c]);
                taken.iter_mut().for_each(|t| *t = false);
                for ky in 0..k {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for kx in 0..k {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        let at = ((n * h + iy as usize) * w + ix as usize) * c;
                        for (ch, &v) in data[at..at + c].iter().enumerate() {
                            if !taken[ch] || v > best[ch] {
                                best[ch] = v;
                                best_at[ch] = at + ch;
                                taken[ch] = true;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((out, argmax))
}

/// 2×2 window, stride 2; spatial dims must be even.
pub fn maxpool2x2<T: Real>(x: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>), NnError> {
    if x.height() % 2 != 0 || x.width() % 2 != 0 {
        return Err(shape_err("maxpool2x2 needs even spatial dims"));
    }
    maxpool(x, 2, 2, 0)
}

pub fn maxpool_backward<T: Real>(
    grad_out: &Tensor<T>,
    argmax: &[usize],
    input_shape: [usize; 4],
) -> Result<Tensor<T>, NnError> {
    if grad_out.len() != argmax.len() {
        return Err(shape_err("maxpool backward shape"));
    }
    let mut dx = Tensor::zeros(input_shape);
    let d = dx.data_mut();
    for (&g, &at) in grad_out.data().iter().zip(argmax) {
        d[at] += g;
    }
    Ok(dx)
}

/// Non-overlapping `k × k` mean; `k` must divide both spatial dims.
pub fn avgpool<T: Real>(x: &Tensor<T>, k: usize) -> Result<Tensor<T>, NnError> {
    let [b, h, w, c] = x.shape();
    if k == 0 || h % k != 0 || w % k != 0 {
        return Err(shape_err(format!("avgpool {k} does not divide {h}x{w}")));
    }
    let (oh, ow) = (h / k, w / k);
    let mut out = Tensor::zeros([b, oh, ow, c]);
    let inv = T::one() / T::from_usize(k * k).unwrap();
    let data = x.data();
    let od = out.data_mut();
    for n in 0..b {
        for iy in 0..h {
            for ix in 0..w {
                let src = ((n * h + iy) * w + ix) * c;
                let dst = ((n * oh + iy / k) * ow + ix / k) * c;
                for ch in 0..c {
                    od[dst + ch] += data[src + ch] * inv;
                }
            }
        }
    }
    Ok(out)
}

pub fn avgpool_backward<T: Real>(
    grad_out: &Tensor<T>,
    k: usize,
    input_shape: [usize; 4],
) -> Result<Tensor<T>, NnError> {
    let [b, h, w, c] = input_shape;
    if k == 0 || grad_out.shape() != [b, h / k, w / k, c] {
        return Err(shape_err("avgpool backward shape"));
    }
    let (oh, ow) = (h / k, w / k);
    let inv = T::one() / T::from_usize(k * k).unwrap();
    let mut dx = Tensor::zeros(input_shape);
    let g = grad_out.data();
    let d = dx.data_mut();
    for n in 0..b {
        for iy in 0..h {
            for ix in 0..w {
                let dst = ((n * h + iy) * w + ix) * c;
                let src = ((n * oh + iy / k) * ow + ix / k) * c;
                for ch in 0..c {
                    d[dst + ch] = g[src + ch] * inv;
                }
            }
        }
    }
    Ok(dx)
}

#[derive(Debug, Clone)]
pub struct MaxPool {
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
    cache: Option<(Vec<usize>, [usize; 4])>,
}

impl MaxPool {
    pub fn new(k: usize, stride: usize, pad: usize) -> Self {
        Self {
            k,
            stride,
            pad,
            cache: None,
        }
    }

    pub fn forward<T: Real>(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        let (y, argmax) = maxpool(x, self.k, self.stride, self.pad)?;
        self.cache = (mode == Mode::Train).then(|| (argmax, x.shape()));
        Ok(y)
    }

    pub fn backward<T: Real>(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let (argmax, shape) = self.cache.take().ok_or(NnError::NoCache)?;
        maxpool_backward(grad_out, &argmax, shape)
    }
}

#[derive(Debug, Clone)]
pub struct AvgPool {
    pub k: usize,
    cache: Option<[usize; 4]>,
}

impl AvgPool {
    pub fn new(k: usize) -> Self {
        Self { k, cache: None }
    }

    pub fn forward<T: Real>(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        let y = avgpool(x, self.k)?;
        self.cache = (mode == Mode::Train).then(|| x.shape());
        Ok(y)
    }

    pub fn backward<T: Real>(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let shape = self.cache.take().ok_or(NnError::NoCache)?;
        avgpool_backward(grad_out, self.k, shape)
    }
}
