//! CGM glucose series: parsing, gap detection and grid resampling.

use chrono::{DateTime, Duration, SecondsFormat, Utc};
use thiserror::Error;

/// Default CGM sampling period in minutes.
pub const DEFAULT_INTERVAL_MIN: u32 = 15;
/// Default maximum hole (minutes) that [`resample`] bridges by interpolation.
pub const DEFAULT_MAX_FILL_MIN: f64 = 45.0;
/// Exclusive physical bounds for a glucose reading, mg/dL.
pub const GLUCOSE_BOUNDS: (f64, f64) = (0.0, 1000.0);
/// mg/dL per mmol/L. Input is always mg/dL; kept for documentation only.
pub const MGDL_PER_MMOLL: f64 = 18.016;

const CSV_HEADER: [&str; 2] = ["timestamp", "glucose_mg_dl"];

#[derive(Debug, Error, PartialEq)]
pub enum CgmError {
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("missing or wrong header, expected `timestamp,glucose_mg_dl`")]
    BadHeader,
    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(DateTime<Utc>),
    #[error("series is empty")]
    EmptySeries,
    #[error("gap tolerance {tolerance} min is below the nominal interval {nominal} min")]
    ToleranceBelowInterval { tolerance: f64, nominal: u32 },
    #[error("invalid resampling parameters: interval {interval} min, max fill {max_fill} min")]
    InvalidResample { interval: u32, max_fill: f64 },
    #[error("glucose value {0} outside (0, 1000) mg/dL")]
    ValueOutOfRange(f64),
    #[error("timestamps not strictly increasing")]
    Unordered,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlucoseSample {
    pub timestamp: DateTime<Utc>,
    /// mg/dL
    pub value: f64,
}

/// One patient's CGM trace, strictly ordered by timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct GlucoseSeries {
    pub patient_id: String,
    samples: Vec<GlucoseSample>,
    pub nominal_interval_min: u32,
}

impl GlucoseSeries {
    /// Builds a series, checking ordering and value bounds.
    pub fn new(
        patient_id: impl Into<String>,
        samples: Vec<GlucoseSample>,
        nominal_interval_min: u32,
    ) -> Result<Self, CgmError> {
        for s in &samples {
            if !valid_glucose(s.value) {
                return Err(CgmError::ValueOutOfRange(s.value));
            }
        }
        for pair in samples.windows(2) {
            if pair[1].timestamp == pair[0].timestamp {
                return Err(CgmError::DuplicateTimestamp(pair[0].timestamp));
            }
            if pair[1].timestamp < pair[0].timestamp {
                return Err(CgmError::Unordered);
            }
        }
        Ok(Self {
            patient_id: patient_id.into(),
            samples,
            nominal_interval_min,
        })
    }

    pub fn samples(&self) -> &[GlucoseSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.value)
    }

    pub fn into_samples(self) -> Vec<GlucoseSample> {
        self.samples
    }
}

fn valid_glucose(v: f64) -> bool {
    v.is_finite() && v > GLUCOSE_BOUNDS.0 && v < GLUCOSE_BOUNDS.1
}

/// A hole between two consecutive samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gap {
    /// Timestamp of the last sample before the hole.
    pub start: DateTime<Utc>,
    /// Timestamp of the first sample after the hole.
    pub end: DateTime<Utc>,
}

impl Gap {
    pub fn minutes(&self) -> f64 {
        (self.end - self.start).num_seconds() as f64 / 60.0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GapReport {
    pub gaps: Vec<Gap>,
}

impl GapReport {
    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }
}

pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s.trim())
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Parses the `timestamp,glucose_mg_dl` CSV format. Rows may arrive in any
/// order; the result is sorted. Duplicate timestamps are rejected.
pub fn parse_cgm_csv(text: &str, patient_id: &str) -> Result<GlucoseSeries, CgmError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let header = reader.headers().map_err(|_| CgmError::BadHeader)?;
    if header.len() != 2 || header.iter().zip(CSV_HEADER).any(|(h, e)| h != e) {
        return Err(CgmError::BadHeader);
    }

    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CgmError::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let malformed = |reason: &str| CgmError::MalformedRow {
            line,
            reason: reason.to_string(),
        };
        if record.len() != 2 {
            return Err(malformed("expected 2 fields"));
        }
        let timestamp = parse_timestamp(&record[0]).ok_or_else(|| malformed("bad timestamp"))?;
        let value: f64 = record[1]
            .parse()
            .map_err(|_| malformed("bad glucose value"))?;
        if !valid_glucose(value) {
            return Err(malformed("glucose outside (0, 1000) mg/dL"));
        }
        samples.push(GlucoseSample { timestamp, value });
    }

    if samples.is_empty() {
        return Err(CgmError::EmptySeries);
    }
    samples.sort_by_key(|s| s.timestamp);
    GlucoseSeries::new(patient_id, samples, DEFAULT_INTERVAL_MIN)
}

pub fn write_cgm_csv(series: &GlucoseSeries) -> String {
    let mut out = String::with_capacity(series.len() * 32 + 32);
    out.push_str("timestamp,glucose_mg_dl\n");
    for s in series.samples() {
        out.push_str(&format_timestamp(&s.timestamp));
        out.push(',');
        // `{}` on f64 is the shortest string that round-trips.
        out.push_str(&format!("{}", s.value));
        out.push('\n');
    }
    out
}

/// Reports every consecutive pair whose spacing exceeds `tolerance_min`.
pub fn detect_gaps(series: &GlucoseSeries, tolerance_min: f64) -> Result<GapReport, CgmError> {
    if series.is_empty() {
        return Err(CgmError::EmptySeries);
    }
    if !(tolerance_min >= series.nominal_interval_min as f64) {
        return Err(CgmError::ToleranceBelowInterval {
            tolerance: tolerance_min,
            nominal: series.nominal_interval_min,
        });
    }
    let tol_s = tolerance_min * 60.0;
    let gaps = series
        .samples()
        .windows(2)
        .filter(|p| ((p[1].timestamp - p[0].timestamp).num_seconds() as f64) > tol_s)
        .map(|p| Gap {
            start: p[0].timestamp,
            end: p[1].timestamp,
        })
        .collect();
    Ok(GapReport { gaps })
}

/// Places the series on an exact `interval_min` grid anchored at the first
/// sample. Grid points are linearly interpolated when the bracketing source
/// samples are at most `max_fill_min` apart and omitted otherwise, so large
/// holes survive. `max_fill_min` may be `f64::INFINITY`.
pub fn resample(
    series: &GlucoseSeries,
    interval_min: u32,
    max_fill_min: f64,
) -> Result<GlucoseSeries, CgmError> {
    if interval_min == 0 || !(max_fill_min >= interval_min as f64) {
        return Err(CgmError::InvalidResample {
            interval: interval_min,
            max_fill: max_fill_min,
        });
    }
    let src = series.samples();
    let (first, last) = match (src.first(), src.last()) {
        (Some(f), Some(l)) => (f.timestamp, l.timestamp),
        _ => return Err(CgmError::EmptySeries),
    };
    let step = Duration::seconds(interval_min as i64 * 60);
    let max_fill_s = max_fill_min * 60.0;

    let mut out = Vec::new();
    let mut j = 0; // src[j].timestamp <= t < src[j + 1].timestamp
    let mut t = first;
    while t <= last {
        while j + 1 < src.len() && src[j + 1].timestamp <= t {
            j += 1;
        }
        let left = src[j];
        if left.timestamp == t {
            out.push(left);
        } else if let Some(right) = src.get(j + 1) {
            let span = (right.timestamp - left.timestamp).num_seconds() as f64;
            if span <= max_fill_s {
                let frac = (t - left.timestamp).num_seconds() as f64 / span;
                out.push(GlucoseSample {
                    timestamp: t,
                    value: left.value + frac * (right.value - left.value),
                });
            }
        }
        t += step;
    }
    GlucoseSeries::new(series.patient_id.clone(), out, interval_min)
}
