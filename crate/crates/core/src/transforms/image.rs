use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::{Matrix, TransformConfig, TransformError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Colormap {
    /// Value replicated across the three channels.
    Grayscale3,
    /// Piecewise-linear table through nine viridis anchor colours.
    Viridis,
}

impl FromStr for Colormap {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "grayscale3" => Ok(Self::Grayscale3),
            "viridis" => Ok(Self::Viridis),
            other => Err(format!("unknown colormap `{other}`")),
        }
    }
}

impl fmt::Display for Colormap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Grayscale3 => "grayscale3",
            Self::Viridis => "viridis",
        })
    }
}

const VIRIDIS: [[f64; 3]; 9] = [
    [0.267004, 0.004874, 0.329415],
    [0.282623, 0.140926, 0.457517],
    [0.253935, 0.265254, 0.529983],
    [0.206756, 0.371758, 0.553117],
    [0.163625, 0.471133, 0.558148],
    [0.127568, 0.566949, 0.550556],
    [0.134692, 0.658636, 0.517649],
    [0.266941, 0.748751, 0.440573],
    [0.993248, 0.906157, 0.143936],
];

impl Colormap {
    pub fn apply(self, v: f64) -> [f64; 3] {
        let v = v.clamp(0.0, 1.0);
        match self {
            Colormap::Grayscale3 => [v; 3],
            Colormap::Viridis => {
                let pos = v * (VIRIDIS.len() - 1) as f64;
                let i = (pos.floor() as usize).min(VIRIDIS.len() - 2);
                let f = pos - i as f64;
                let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
                [0, 1, 2].map(|c| a[c] + f * (b[c] - a[c]))
            }
        }
    }
}

/// `height × width × channels` image, channel-last, values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl ImageTensor {
    pub fn pixel(&self, y: usize, x: usize) -> &[f32] {
        let at = (y * self.width + x) * self.channels;
        &self.data[at..at + self.channels]
    }
}

/// Bilinear resampling with corner pixels aligned: output pixel `i` samples
/// the source at `i · (in − 1) / (out − 1)`.
pub fn resize_bilinear(m: &Matrix, out_rows: usize, out_cols: usize) -> Matrix {
    let coord = |i: usize, n_in: usize, n_out: usize| -> (usize, usize, f64) {
        if n_in == 1 || n_out == 1 {
            return (0, 0, 0.0);
        }
        let src = i as f64 * (n_in - 1) as f64 / (n_out - 1) as f64;
        let lo = (src.floor() as usize).min(n_in - 1);
        let hi = (lo + 1).min(n_in - 1);
        (lo, hi, src - lo as f64)
    };
    let cols: Vec<_> = (0..out_cols).map(|c| coord(c, m.cols, out_cols)).collect();
    let mut out = Matrix::zeros(out_rows, out_cols);
    for r in 0..out_rows {
        let (r0, r1, fr) = coord(r, m.rows, out_rows);
        for (c, &(c0, c1, fc)) in cols.iter().enumerate() {
            let top = m.get(r0, c0) * (1.0 - fc) + m.get(r0, c1) * fc;
            let bottom = m.get(r1, c0) * (1.0 - fc) + m.get(r1, c1) * fc;
            out.set(r, c, top * (1.0 - fr) + bottom * fr);
        }
    }
    out
}

/// Min–max normalises, resizes to `config.image_size` square and colours.
/// A constant matrix maps to 0.5 everywhere.
pub fn to_image(matrix: &Matrix, config: &TransformConfig) -> Result<ImageTensor, TransformError> {
    if matrix.data.is_empty() || matrix.data.iter().any(|v| !v.is_finite()) {
        return Err(TransformError::NonFiniteInput);
    }
    let (min, max) = matrix
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = max - min;
    let normalized = Matrix::new(
        matrix.rows,
        matrix.cols,
        matrix
            .data
            .iter()
            .map(|&v| if range > 0.0 { (v - min) / range } else { 0.5 })
            .collect(),
    );
    let size = config.image_size;
    let resized = if (normalized.rows, normalized.cols) == (size, size) {
        normalized
    } else {
        resize_bilinear(&normalized, size, size)
    };
    let mut data = Vec::with_capacity(size * size * 3);
    for &v in &resized.data {
        data.extend(config.colormap.apply(v).map(|c| c as f32));
    }
    Ok(ImageTensor {
        height: size,
        width: size,
        channels: 3,
        data,
    })
}

/// 8-bit RGB PNG, each channel `round(v · 255)`.
pub fn write_png(image: &ImageTensor, path: &Path) -> Result<(), TransformError> {
    let bytes: Vec<u8> = image
        .data
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let buf = ::image::RgbImage::from_raw(image.width as u32, image.height as u32, bytes)
        .ok_or_else(|| TransformError::Png("buffer size mismatch".into()))?;
    buf.save_with_format(path, ::image::ImageFormat::Png)
        .map_err(|e| TransformError::Png(e.to_string()))
}
