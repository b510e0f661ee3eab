//! Glucose window → image transforms.
//!
//! Two transform families are available: a Morlet-wavelet scalogram (the
//! default) and a Gramian angular summation field. Both produce a real
//! matrix that [`to_image`] turns into an RGB float tensor.

mod cwt;
mod gaf;
mod image;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use self::cwt::{cwt, geometric_scales, morlet, scalogram, ComplexMatrix, Scalogram};
pub use self::gaf::gaf;
pub use self::image::{resize_bilinear, to_image, write_png, Colormap, ImageTensor};

#[derive(Debug, Error, PartialEq)]
pub enum TransformError {
    #[error("signal has {0} samples, need at least 8")]
    SignalTooShort(usize),
    #[error("scale {scale} out of range for a {len}-sample signal")]
    ScaleOutOfRange { scale: f64, len: usize },
    #[error("value {0} outside the glucose range")]
    ValueOutOfRange(f64),
    #[error("matrix contains non-finite values")]
    NonFiniteInput,
    #[error("invalid transform config: {0}")]
    InvalidConfig(&'static str),
    #[error("png export failed: {0}")]
    Png(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Scalogram,
    Gaf,
}

impl FromStr for TransformKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "scalogram" => Ok(Self::Scalogram),
            "gaf" => Ok(Self::Gaf),
            other => Err(format!("unknown transform `{other}`")),
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Scalogram => "scalogram",
            Self::Gaf => "gaf",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformConfig {
    pub kind: TransformKind,
    pub n_scales: usize,
    pub morlet_omega0: f64,
    pub colormap: Colormap,
    /// mg/dL range mapped onto [0, 1].
    pub glucose_range: (f64, f64),
    /// Output images are `image_size × image_size × 3`.
    pub image_size: usize,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            kind: TransformKind::Scalogram,
            n_scales: 64,
            morlet_omega0: 6.0,
            colormap: Colormap::Grayscale3,
            glucose_range: (40.0, 400.0),
            image_size: 224,
        }
    }
}

impl TransformConfig {
    pub fn validate(&self) -> Result<(), TransformError> {
        if self.n_scales < 2 {
            return Err(TransformError::InvalidConfig("n_scales must be >= 2"));
        }
        if !(self.morlet_omega0 >= 5.0) {
            return Err(TransformError::InvalidConfig("morlet_omega0 must be >= 5"));
        }
        let (lo, hi) = self.glucose_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(TransformError::InvalidConfig("glucose_range must be increasing"));
        }
        if self.image_size < 2 {
            return Err(TransformError::InvalidConfig("image_size must be >= 2"));
        }
        Ok(())
    }
}

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }
}

/// Affine map of mg/dL onto [0, 1] over `range`, clipping first.
pub fn normalize_glucose(values: &[f64], range: (f64, f64)) -> Vec<f64> {
    let (lo, hi) = range;
    values
        .iter()
        .map(|v| (v.clamp(lo, hi) - lo) / (hi - lo))
        .collect()
}

/// Full window → image path for the configured transform.
pub fn render(values_mg_dl: &[f64], config: &TransformConfig) -> Result<ImageTensor, TransformError> {
    config.validate()?;
    let matrix = match config.kind {
        TransformKind::Scalogram => {
            let normalized = normalize_glucose(values_mg_dl, config.glucose_range);
            scalogram(&normalized, config)?.into_matrix()
        }
        TransformKind::Gaf => {
            let (lo, hi) = config.glucose_range;
            let clipped: Vec<f64> = values_mg_dl.iter().map(|v| v.clamp(lo, hi)).collect();
            gaf(&clipped, config)?
        }
    };
    to_image(&matrix, config)
}
