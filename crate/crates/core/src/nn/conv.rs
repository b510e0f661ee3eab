use super::{gemm, op, op_t, shape_err, Mode, NnError, Param, Real, Tensor, Visit};

/// Spatial layout of a convolution. The kernel is `kh × kw × cin × cout`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub kh: usize,
    pub kw: usize,
    pub cin: usize,
    pub cout: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvGeometry {
    pub fn square(k: usize, cin: usize, cout: usize, stride: usize, pad: usize) -> Self {
        Self {
            kh: k,
            kw: k,
            cin,
            cout,
            stride,
            pad,
        }
    }

    pub fn kernel_len(&self) -> usize {
        self.kh * self.kw * self.cin * self.cout
    }

    /// Output spatial size for an `h × w` input.
    pub fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize), NnError> {
        if self.stride == 0 {
            return Err(shape_err("stride must be >= 1"));
        }
        let (ph, pw) = (h + 2 * self.pad, w + 2 * self.pad);
        if self.kh > ph || self.kw > pw {
            return Err(shape_err(format!(
                "kernel {}x{} larger than padded input {}x{}",
                self.kh, self.kw, ph, pw
            )));
        }
        Ok(((ph - self.kh) / self.stride + 1, (pw - self.kw) / self.stride + 1))
    }

    fn is_pointwise(&self) -> bool {
        self.kh == 1 && self.kw == 1 && self.stride == 1 && self.pad == 0
    }
}

/// Kernel columns `kx` whose input column `ox·stride + kx − pad` lies in
/// `[0, w)`, as a half-open range.
fn valid_taps(o: usize, g: &ConvGeometry, k: usize, w: usize) -> (usize, usize) {
    let start = (o * g.stride) as isize - g.pad as isize;
    let lo = (-start).clamp(0, k as isize) as usize;
    let hi = (w as isize - start).clamp(0, k as isize) as usize;
    (lo, hi.max(lo))
}

/// Appends the im2col rows of `x` to `cols`.
fn im2col<T: Real>(x: &Tensor<T>, g: &ConvGeometry, oh: usize, ow: usize, cols: &mut Vec<T>) {
    let [b, h, w, c] = x.shape();
    let k = g.kh * g.kw * c;
    let zeros = |cols: &mut Vec<T>, n: usize| cols.extend(std::iter::repeat_n(T::zero(), n));
    cols.reserve(b * oh * ow * k);
    let data = x.data();
    for n in 0..b {
        for oy in 0..oh {
            let (ky_lo, ky_hi) = valid_taps(oy, g, g.kh, h);
            for ox in 0..ow {
                let (kx_lo, kx_hi) = valid_taps(ox, g, g.kw, w);
                if kx_hi == kx_lo {
                    zeros(cols, k);
                    continue;
                }
                let ix = ox * g.stride + kx_lo - g.pad;
                let run = (kx_hi - kx_lo) * c;
                zeros(cols, ky_lo * g.kw * c);
                for ky in ky_lo..ky_hi {
                    let src = ((n * h + oy * g.stride + ky - g.pad) * w + ix) * c;
                    zeros(cols, kx_lo * c);
                    cols.extend_from_slice(&data[src..src + run]);
                    zeros(cols, (g.kw - kx_hi) * c);
                }
                zeros(cols, (g.kh - ky_hi) * g.kw * c);
            }
        }
    }
}

fn col2im<T: Real>(cols: &[T], shape: [usize; 4], g: &ConvGeometry, oh: usize, ow: usize) -> Tensor<T> {
    let [b, h, w, c] = shape;
    let k = g.kh * g.kw * c;
    let mut out = Tensor::zeros(shape);
    let data = out.data_mut();
    let mut row = 0;
    for n in 0..b {
        for oy in 0..oh {
            let (ky_lo, ky_hi) = valid_taps(oy, g, g.kh, h);
            for ox in 0..ow {
                let (kx_lo, kx_hi) = valid_taps(ox, g, g.kw, w);
                row += 1;
                if kx_hi == kx_lo {
                    continue;
                }
                let src = &cols[(row - 1) * k..row * k];
                let ix = ox * g.stride + kx_lo - g.pad;
                let run = (kx_hi - kx_lo) * c;
                for ky in ky_lo..ky_hi {
                    let iy = oy * g.stride + ky - g.pad;
                    let dst = ((n * h + iy) * w + ix) * c;
                    let at = (ky * g.kw + kx_lo) * c;
                    for (d, s) in data[dst..dst + run].iter_mut().zip(&src[at..at + run]) {
                        *d += *s;
                    }
                }
            }
        }
    }
    out
}

fn check_input<T: Real>(x: &Tensor<T>, kernel: &[T], g: &ConvGeometry) -> Result<(usize, usize), NnError> {
    if x.channels() != g.cin {
        return Err(shape_err(format!(
            "conv expects {} input channels, got {}",
            g.cin,
            x.channels()
        )));
    }
    if kernel.len() != g.kernel_len() {
        return Err(shape_err("kernel length does not match geometry"));
    }
    g.output_hw(x.height(), x.width())
}

/// Cross-correlation (no kernel flip) via im2col and a matrix product.
/// Returns the output and the im2col buffer needed by the backward pass.
pub fn conv2d<T: Real>(
    x: &Tensor<T>,
    kernel: &[T],
    g: &ConvGeometry,
) -> Result<(Tensor<T>, Vec<T>), NnError> {
    let mut cols = Vec::new();
    let out = conv2d_into(x, kernel, g, &mut cols)?;
    Ok((out, cols))
}

/// [`conv2d`] writing the im2col buffer into `cols`, reusing its allocation.
pub fn conv2d_into<T: Real>(
    x: &Tensor<T>,
    kernel: &[T],
    g: &ConvGeometry,
    cols: &mut Vec<T>,
) -> Result<Tensor<T>, NnError> {
    let (oh, ow) = check_input(x, kernel, g)?;
    let rows = x.batch() * oh * ow;
    let k = g.kh * g.kw * g.cin;
    cols.clear();
    if g.is_pointwise() {
        cols.extend_from_slice(x.data());
    } else {
        im2col(x, g, oh, ow, cols);
    }
    let mut out = Tensor::zeros([x.batch(), oh, ow, g.cout]);
    gemm(rows, k, g.cout, op(cols), op(kernel), out.data_mut(), false);
    Ok(out)
}

/// Gradients of a [`conv2d`] call. The kernel gradient is added into
/// `kernel_grad`; the input gradient is returned when `want_input`.
pub fn conv2d_backward<T: Real>(
    grad_out: &Tensor<T>,
    cols: &[T],
    input_shape: [usize; 4],
    kernel: &[T],
    kernel_grad: &mut [T],
    g: &ConvGeometry,
    want_input: bool,
) -> Result<Option<Tensor<T>>, NnError> {
    conv2d_backward_with(grad_out, cols, input_shape, kernel, kernel_grad, g, want_input, &mut Vec::new())
}

/// [`conv2d_backward`] using `scratch` for the column gradients.
#[allow(clippy::too_many_arguments)]
fn conv2d_backward_with<T: Real>(
    grad_out: &Tensor<T>,
    cols: &[T],
    input_shape: [usize; 4],
    kernel: &[T],
    kernel_grad: &mut [T],
    g: &ConvGeometry,
    want_input: bool,
    scratch: &mut Vec<T>,
) -> Result<Option<Tensor<T>>, NnError> {
    let (oh, ow) = g.output_hw(input_shape[1], input_shape[2])?;
    let rows = input_shape[0] * oh * ow;
    let k = g.kh * g.kw * g.cin;
    if grad_out.shape() != [input_shape[0], oh, ow, g.cout] || cols.len() != rows * k {
        return Err(shape_err("conv backward shapes"));
    }
    gemm(k, rows, g.cout, op_t(cols), op(grad_out.data()), kernel_grad, true);
    if !want_input {
        return Ok(None);
    }
    if g.is_pointwise() {
        let mut dx = Tensor::zeros(input_shape);
        gemm(rows, g.cout, k, op(grad_out.data()), op_t(kernel), dx.data_mut(), false);
        return Ok(Some(dx));
    }
    scratch.resize(rows * k, T::zero());
    gemm(rows, g.cout, k, op(grad_out.data()), op_t(kernel), scratch, false);
    Ok(Some(col2im(scratch, input_shape, g, oh, ow)))
}

/// Bias-free convolution layer.
#[derive(Debug, Clone)]
pub struct Conv2d<T> {
    pub geometry: ConvGeometry,
    pub weight: Param<T>,
    /// Input shape of the last training-mode forward pass.
    cached_shape: Option<[usize; 4]>,
    cols: Vec<T>,
    scratch: Vec<T>,
}

impl<T: Real> Conv2d<T> {
    pub fn new(geometry: ConvGeometry, weights: Vec<T>) -> Self {
        let g = geometry;
        Self {
            weight: Param::new(vec![g.kh, g.kw, g.cin, g.cout], weights),
            geometry,
            cached_shape: None,
            cols: Vec::new(),
            scratch: Vec::new(),
        }
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        self.cached_shape = None;
        let out = conv2d_into(x, &self.weight.value, &self.geometry, &mut self.cols)?;
        self.cached_shape = (mode == Mode::Train).then(|| x.shape());
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>, want_input: bool) -> Result<Option<Tensor<T>>, NnError> {
        let shape = self.cached_shape.take().ok_or(NnError::NoCache)?;
        conv2d_backward_with(
            grad_out,
            &self.cols,
            shape,
            &self.weight.value,
            &mut self.weight.grad,
            &self.geometry,
            want_input,
            &mut self.scratch,
        )
    }
}

impl<T: Real> Visit<T> for Conv2d<T> {
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut super::Param<T>)) {
        f(&format!("{prefix}.weight"), &mut self.weight);
    }
}
