use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{Matrix, TransformConfig, TransformError};

/// Half-width, in units of scale, of the wavelet's effective support used
/// for the range check.
const SUPPORT_HALF_WIDTH: f64 = 4.0;
/// Half-width, in units of scale, over which the kernel is actually sampled.
/// The Gaussian envelope is below 1e-13 beyond this.
const SAMPLED_HALF_WIDTH: f64 = 8.0;

/// Analytic Morlet wavelet `π^(-1/4) · exp(i·ω0·u) · exp(-u²/2)`.
pub fn morlet(u: f64, omega0: f64) -> Complex64 {
    let envelope = PI.powf(-0.25) * (-0.5 * u * u).exp();
    Complex64::from_polar(envelope, omega0 * u)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Continuous wavelet transform with circular boundary handling:
/// `W(a, b) = a^(-1/2) · Σ_t x(t) · conj(ψ((t - b) / a))`, `t - b` taken
/// modulo the signal length. Each row is computed as an FFT cross-correlation
/// of the signal with the periodised, dilated wavelet.
pub fn cwt(signal: &[f64], scales: &[f64], omega0: f64) -> Result<ComplexMatrix, TransformError> {
    let n = signal.len();
    if n < 8 {
        return Err(TransformError::SignalTooShort(n));
    }
    for &a in scales {
        if !(a > 0.0) || 2.0 * SUPPORT_HALF_WIDTH * a > 4.0 * n as f64 * (1.0 + 1e-12) {
            return Err(TransformError::ScaleOutOfRange { scale: a, len: n });
        }
    }

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    let mut spectrum: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward.process(&mut spectrum);

    let mut data = Vec::with_capacity(scales.len() * n);
    let mut kernel = vec![Complex64::new(0.0, 0.0); n];
    let inv_n = 1.0 / n as f64;
    for &a in scales {
        kernel.fill(Complex64::new(0.0, 0.0));
        let norm = 1.0 / a.sqrt();
        let reach = (SAMPLED_HALF_WIDTH * a).ceil() as i64;
        for d in -reach..=reach {
            let slot = d.rem_euclid(n as i64) as usize;
            kernel[slot] += morlet(d as f64 / a, omega0) * norm;
        }
        forward.process(&mut kernel);
        for (k, s) in kernel.iter_mut().zip(&spectrum) {
            *k = s * k.conj();
        }
        inverse.process(&mut kernel);
        data.extend(kernel.iter().map(|v| v * inv_n));
    }
    Ok(ComplexMatrix {
        rows: scales.len(),
        cols: n,
        data,
    })
}

/// `count` scales spaced geometrically from `lo` to `hi` inclusive.
pub fn geometric_scales(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    let mut scales: Vec<f64> = (0..count).map(|i| lo * (ratio * i as f64).exp()).collect();
    scales[count - 1] = hi;
    scales
}

/// |CWT| over scales × time. Row `i` corresponds to `scales[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalogram {
    pub magnitudes: Matrix,
    pub scales: Vec<f64>,
}

impl Scalogram {
    pub fn into_matrix(self) -> Matrix {
        self.magnitudes
    }
}

/// Mean-removed Morlet scalogram over scales 2 .. N/2 samples.
pub fn scalogram(signal: &[f64], config: &TransformConfig) -> Result<Scalogram, TransformError> {
    let n = signal.len();
    if n < 8 {
        return Err(TransformError::SignalTooShort(n));
    }
    let mean = signal.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = signal.iter().map(|v| v - mean).collect();
    let scales = geometric_scales(2.0, n as f64 / 2.0, config.n_scales);
    let w = cwt(&centred, &scales, config.morlet_omega0)?;
    let magnitudes = Matrix::new(w.rows, w.cols, w.data.iter().map(|c| c.norm()).collect());
    Ok(Scalogram { magnitudes, scales })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Literal circular sum, wrapping the wavelet argument explicitly.
    fn direct(signal: &[f64], a: f64, omega0: f64) -> Vec<Complex64> {
        let n = signal.len() as i64;
        (0..n)
            .map(|b| {
                let mut acc = Complex64::new(0.0, 0.0);
                for t in 0..n {
                    for wrap in -6..=6 {
                        let u = (t - b + wrap * n) as f64 / a;
                        acc += signal[t as usize] * morlet(u, omega0).conj();
                    }
                }
                acc / a.sqrt()
            })
            .collect()
    }

    #[test]
    fn zero_signal_is_zero() {
        let w = cwt(&[0.0; 32], &[2.0, 5.0, 11.0], 6.0).unwrap();
        assert!(w.data.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn linear_in_signal() {
        let x: Vec<f64> = (0..40).map(|k| ((k * k) % 7) as f64 - 3.0).collect();
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let scales = geometric_scales(2.0, 20.0, 9);
        let w1 = cwt(&x, &scales, 6.0).unwrap();
        let w2 = cwt(&x2, &scales, 6.0).unwrap();
        for (a, b) in w1.data.iter().zip(&w2.data) {
            assert!((a * 2.0 - b).norm() < 1e-9);
        }
    }

    #[test]
    fn impulse_response_is_reversed_conjugate_wavelet() {
        let n = 64usize;
        let centre = 32usize;
        let a = 3.0;
        let mut x = vec![0.0; n];
        x[centre] = 1.0;
        let w = cwt(&x, &[a], 6.0).unwrap();
        for b in 0..n {
            let u = (centre as f64 - b as f64) / a;
            let expected = morlet(u, 6.0).conj() / a.sqrt();
            assert!((w.get(0, b) - expected).norm() < 1e-12, "b={b}");
        }
    }

    #[test]
    fn fft_matches_direct_sum() {
        let x: Vec<f64> = (0..48).map(|k| (k as f64 * 0.37).sin() + 0.1 * k as f64).collect();
        for &a in &[2.0, 4.5, 13.0, 24.0] {
            let fast = cwt(&x, &[a], 6.0).unwrap();
            let slow = direct(&x, a, 6.0);
            let scale = slow.iter().map(|c| c.norm()).fold(0.0, f64::max);
            for (f, s) in fast.row(0).iter().zip(&slow) {
                assert!((f - s).norm() / scale < 1e-10);
            }
        }
    }

    #[test]
    fn errors() {
        assert_eq!(cwt(&[1.0; 4], &[2.0], 6.0), Err(TransformError::SignalTooShort(4)));
        assert!(matches!(
            cwt(&[1.0; 16], &[0.0], 6.0),
            Err(TransformError::ScaleOutOfRange { .. })
        ));
        assert!(matches!(
            cwt(&[1.0; 16], &[9.0], 6.0),
            Err(TransformError::ScaleOutOfRange { .. })
        ));
    }

    #[test]
    fn constant_signal_vanishes() {
        let s = scalogram(&[0.4; 96], &TransformConfig::default()).unwrap();
        assert!(s.magnitudes.data.iter().all(|&m| m < 1e-9));
        assert_eq!((s.magnitudes.rows, s.magnitudes.cols), (64, 96));
        assert!((s.scales[0] - 2.0).abs() < 1e-12 && (s.scales[63] - 48.0).abs() < 1e-9);
    }
}
