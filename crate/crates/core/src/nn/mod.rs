//! Tensors and hand-differentiated layer primitives.
//!
//! Tensors are channel-last (`batch × height × width × channels`). Every layer
//! caches what its backward pass needs during a training-mode forward and
//! accumulates parameter gradients on `backward`.

mod activation;
mod batchnorm;
mod conv;
mod dense;
mod loss;
mod pool;

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};
use thiserror::Error;

pub use self::activation::{relu, relu_backward, Relu};
pub use self::batchnorm::{BatchNorm, BN_EPS, BN_MOMENTUM};
pub use self::conv::{conv2d, conv2d_backward, Conv2d, ConvGeometry};
pub use self::dense::{dense, dense_backward, Dense};
pub use self::loss::{softmax, softmax_cross_entropy, LossOutput};
pub use self::pool::{avgpool, avgpool_backward, maxpool, maxpool2x2, maxpool_backward, AvgPool, MaxPool};

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("batch normalisation needs at least 2 values per channel, got {0}")]
    BatchTooSmall(usize),
    #[error("one-hot targets must be non-negative rows summing to 1")]
    InvalidOneHot,
    #[error("backward called without a cached training forward pass")]
    NoCache,
}

pub(crate) fn shape_err(msg: impl Into<String>) -> NnError {
    NnError::ShapeMismatch(msg.into())
}

/// Floating-point element type: `f64` for gradient checks, `f32` for training.
pub trait Real:
    Float
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Default
    + Debug
    + Send
    + Sync
    + 'static
{
    /// `c = alpha·a·b + beta·c` over raw strided buffers.
    ///
    /// # Safety
    /// Strides and dimensions must address memory inside the given slices.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
    );

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("representable literal")
    }
}

impl Real for f32 {
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
    ) {
        matrixmultiply::sgemm(m, k, n, 1.0, a, rsa, csa, b, rsb, csb, beta, c, n as isize, 1);
    }
}

impl Real for f64 {
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
    ) {
        matrixmultiply::dgemm(m, k, n, 1.0, a, rsa, csa, b, rsb, csb, beta, c, n as isize, 1);
    }
}

/// Row-major matrix operand for [`gemm`]; `transposed` means the buffer holds
/// the transpose of the logical operand.
#[derive(Clone, Copy)]
pub(crate) struct Operand<'a, T> {
    pub data: &'a [T],
    pub transposed: bool,
}

pub(crate) fn op<T>(data: &[T]) -> Operand<'_, T> {
    Operand {
        data,
        transposed: false,
    }
}

pub(crate) fn op_t<T>(data: &[T]) -> Operand<'_, T> {
    Operand {
        data,
        transposed: true,
    }
}

/// `c (m×n) = a (m×k) · b (k×n)`, adding into `c` when `accumulate`.
pub(crate) fn gemm<T: Real>(
    m: usize,
    k: usize,
    n: usize,
    a: Operand<'_, T>,
    b: Operand<'_, T>,
    c: &mut [T],
    accumulate: bool,
) {
    assert!(a.data.len() >= m * k && b.data.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    let beta = if accumulate { T::one() } else { T::zero() };
    if k == 0 {
        if !accumulate {
            c[..m * n].fill(T::zero());
        }
        return;
    }
    let (rsa, csa) = if a.transposed { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b.transposed { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the asserts above bound every address the strides reach.
    unsafe {
        T::gemm_raw(
            m,
            k,
            n,
            a.data.as_ptr(),
            rsa,
            csa,
            b.data.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Dense NHWC tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: [usize; 4],
    data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn zeros(shape: [usize; 4]) -> Self {
        Self {
            shape,
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    pub fn from_vec(shape: [usize; 4], data: Vec<T>) -> Result<Self, NnError> {
        if data.len() != shape.iter().product::<usize>() {
            return Err(shape_err(format!(
                "{} values for shape {:?}",
                data.len(),
                shape
            )));
        }
        Ok(Self { shape, data })
    }

    /// `batch × features` tensor stored as `[batch, 1, 1, features]`.
    pub fn matrix(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, NnError> {
        Self::from_vec([rows, 1, 1, cols], data)
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    pub fn height(&self) -> usize {
        self.shape[1]
    }

    pub fn width(&self) -> usize {
        self.shape[2]
    }

    pub fn channels(&self) -> usize {
        self.shape[3]
    }

    /// Elements per batch item.
    pub fn item_len(&self) -> usize {
        self.shape[1] * self.shape[2] * self.shape[3]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Concatenates along the channel axis.
    pub fn concat_channels(parts: &[&Tensor<T>]) -> Result<Self, NnError> {
        let first = parts.first().ok_or_else(|| shape_err("empty concat"))?;
        let [b, h, w, _] = first.shape;
        if parts.iter().any(|p| p.shape[..3] != [b, h, w]) {
            return Err(shape_err("concat spatial shapes differ"));
        }
        let total: usize = parts.iter().map(|p| p.shape[3]).sum();
        let mut data = Vec::with_capacity(b * h * w * total);
        for pos in 0..b * h * w {
            for p in parts {
                let c = p.shape[3];
                data.extend_from_slice(&p.data[pos * c..(pos + 1) * c]);
            }
        }
        Ok(Self {
            shape: [b, h, w, total],
            data,
        })
    }

    /// Copies channels `[from, to)`.
    pub fn slice_channels(&self, from: usize, to: usize) -> Self {
        let [b, h, w, c] = self.shape;
        assert!(from <= to && to <= c);
        let width = to - from;
        let mut data = Vec::with_capacity(b * h * w * width);
        for pos in 0..b * h * w {
            data.extend_from_slice(&self.data[pos * c + from..pos * c + to]);
        }
        Self {
            shape: [b, h, w, width],
            data,
        }
    }

    /// Adds `other` into channels `[from, from + other.channels)`.
    pub fn add_into_channels(&mut self, from: usize, other: &Tensor<T>) {
        let [b, h, w, c] = self.shape;
        let oc = other.shape[3];
        assert_eq!(other.shape[..3], [b, h, w]);
        assert!(from + oc <= c);
        for pos in 0..b * h * w {
            let dst = &mut self.data[pos * c + from..pos * c + from + oc];
            for (d, s) in dst.iter_mut().zip(&other.data[pos * oc..(pos + 1) * oc]) {
                *d += *s;
            }
        }
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape,
            data: self
                .data
                .iter()
                .map(|v| U::from_f64(v.to_f64().unwrap_or(f64::NAN)).unwrap_or(U::nan()))
                .collect(),
        }
    }
}

/// A trainable tensor with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub value: Vec<T>,
    pub grad: Vec<T>,
    pub shape: Vec<usize>,
}

impl<T: Real> Param<T> {
    pub fn new(shape: Vec<usize>, value: Vec<T>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), value.len());
        Self {
            grad: vec![T::zero(); value.len()],
            value,
            shape,
        }
    }

    pub fn filled(shape: Vec<usize>, v: T) -> Self {
        let n = shape.iter().product();
        Self::new(shape, vec![v; n])
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::zero());
    }
}

/// Non-trainable state (batch-norm running statistics).
#[derive(Debug, Clone, PartialEq)]
pub struct Buffer<T> {
    pub value: Vec<T>,
    pub shape: Vec<usize>,
}

/// Visitor over named parameters and buffers, in a fixed order.
pub trait Visit<T> {
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<T>));
    fn visit_buffers(&mut self, _prefix: &str, _f: &mut dyn FnMut(&str, &mut Buffer<T>)) {}
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gemm_transposes() {
        // a = [[1,2,3],[4,5,6]] (2×3), b = [[1,0],[0,1],[1,1]] (3×2)
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [1.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let mut c = [0.0f64; 4];
        gemm(2, 3, 2, op(&a), op(&b), &mut c, false);
        assert_eq!(c, [4.0, 5.0, 10.0, 11.0]);
        let at = [1.0, 4.0, 2.0, 5.0, 3.0, 6.0];
        let bt = [1.0, 0.0, 1.0, 0.0, 1.0, 1.0];
        let mut c2 = [1.0f64; 4];
        gemm(2, 3, 2, op_t(&at), op_t(&bt), &mut c2, true);
        assert_eq!(c2, [5.0, 6.0, 11.0, 12.0]);
    }

    #[test]
    fn concat_and_slice() {
        let a = Tensor::<f64>::from_vec([1, 1, 2, 1], vec![1.0, 2.0]).unwrap();
        let b = Tensor::<f64>::from_vec([1, 1, 2, 2], vec![3.0, 4.0, 5.0, 6.0]).unwrap();
        let c = Tensor::concat_channels(&[&a, &b]).unwrap();
        assert_eq!(c.data(), &[1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
        assert_eq!(c.slice_channels(1, 3), b);
        let mut z = Tensor::<f64>::zeros([1, 1, 2, 3]);
        z.add_into_channels(1, &b);
        assert_eq!(z.data(), &[0.0, 3.0, 4.0, 0.0, 5.0, 6.0]);
    }
}
