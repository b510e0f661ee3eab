//! Synthetic CGM traces.
//!
//! Glucose is modelled additively: a basal level, a circadian sine peaking in
//! the early morning, meal responses (difference-of-exponentials kernel, peak
//! after ~35 min, decay over ~3 h), hypoglycemic dips pulled down to a trough
//! in 48..62 mg/dL, and white noise, clipped to the CGM reporting range.
//!
//! Each day is either "stable" or "unstable", following a two-state Markov
//! chain that persists from one day to the next with probability 0.8.
//! Unstable days carry most of the hypoglycemia events and larger meal swings,
//! so a day's trace carries information about the next day's risk.
//!
//! All randomness comes from ChaCha8 seeded with the profile seed, which makes
//! output identical across platforms for a given seed.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use thiserror::Error;

use crate::cgm::{GlucoseSample, GlucoseSeries, DEFAULT_INTERVAL_MIN};

/// Commercial CGM reporting limits, mg/dL.
pub const CLIP_RANGE: (f64, f64) = (40.0, 400.0);

const SAMPLES_PER_DAY: usize = 96;
const CIRCADIAN_AMPLITUDE: f64 = 12.0;
const CIRCADIAN_PEAK_HOUR: f64 = 5.0;
const MEAL_RISE_MIN: f64 = 12.0;
const MEAL_DECAY_MIN: f64 = 160.0;
const REGIME_PERSISTENCE: f64 = 0.8;
const UNSTABLE_HYPO_FACTOR: f64 = 1.6;
const STABLE_HYPO_FACTOR: f64 = 0.4;
const UNSTABLE_MEAL_FACTOR: f64 = 1.4;
const HYPO_TROUGH: (f64, f64) = (48.0, 62.0);
const HYPO_WIDTH_MIN: (f64, f64) = (30.0, 50.0);

#[derive(Debug, Error, PartialEq)]
pub enum SyntheticError {
    #[error("days must be at least 1")]
    NoDays,
    #[error("cohort needs at least one patient")]
    NoPatients,
    #[error("invalid profile: {0}")]
    InvalidProfile(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatientProfile {
    /// mg/dL, within [70, 180].
    pub basal_glucose: f64,
    /// Clock hours of the daily meals.
    pub meal_times: Vec<f64>,
    /// Peak meal response, mg/dL.
    pub meal_amplitude: f64,
    /// Expected hypoglycemia events per day.
    pub hypo_rate: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl PatientProfile {
    pub fn validate(&self) -> Result<(), SyntheticError> {
        if !(70.0..=180.0).contains(&self.basal_glucose) {
            return Err(SyntheticError::InvalidProfile("basal_glucose outside [70, 180]"));
        }
        if !(self.noise_std >= 0.0) {
            return Err(SyntheticError::InvalidProfile("noise_std must be >= 0"));
        }
        if !(self.hypo_rate >= 0.0) {
            return Err(SyntheticError::InvalidProfile("hypo_rate must be >= 0"));
        }
        if !(self.meal_amplitude >= 0.0) {
            return Err(SyntheticError::InvalidProfile("meal_amplitude must be >= 0"));
        }
        Ok(())
    }
}

/// Start of every synthetic trace.
pub fn series_start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2021, 3, 1, 0, 0, 0).unwrap()
}

fn meal_kernel(dt_min: f64) -> f64 {
    if dt_min <= 0.0 {
        return 0.0;
    }
    let (r, d) = (MEAL_RISE_MIN, MEAL_DECAY_MIN);
    let t_peak = (d / r).ln() * r * d / (d - r);
    let peak = (-t_peak / d).exp() - (-t_peak / r).exp();
    ((-dt_min / d).exp() - (-dt_min / r).exp()) / peak
}

struct Event {
    at_min: f64,
    magnitude: f64,
    width_min: f64,
}

/// Generates `days` × 96 samples at 15-minute spacing.
pub fn generate_series(
    profile: &PatientProfile,
    patient_id: &str,
    days: usize,
) -> Result<GlucoseSeries, SyntheticError> {
    if days == 0 {
        return Err(SyntheticError::NoDays);
    }
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let day_min = 24.0 * 60.0;

    let mut unstable = rng.random_bool(0.5);
    let mut meals = Vec::new();
    let mut hypos = Vec::new();
    for day in 0..days {
        if day > 0 && !rng.random_bool(REGIME_PERSISTENCE) {
            unstable = !unstable;
        }
        let day_start = day as f64 * day_min;
        let meal_factor = if unstable { UNSTABLE_MEAL_FACTOR } else { 1.0 };
        for &hour in &profile.meal_times {
            let jitter = rng.random_range(-30.0..=30.0);
            let scale = rng.random_range(0.7..=1.3);
            meals.push(Event {
                at_min: day_start + hour * 60.0 + jitter,
                magnitude: profile.meal_amplitude * meal_factor * scale,
                width_min: 0.0,
            });
        }
        let rate = profile.hypo_rate
            * if unstable {
                UNSTABLE_HYPO_FACTOR
            } else {
                STABLE_HYPO_FACTOR
            };
        let count = if rate > 0.0 {
            Poisson::new(rate).map(|p| p.sample(&mut rng) as usize).unwrap_or(0)
        } else {
            0
        };
        for _ in 0..count {
            hypos.push(Event {
                at_min: day_start + rng.random_range(0.0..day_min),
                magnitude: rng.random_range(HYPO_TROUGH.0..=HYPO_TROUGH.1),
                width_min: rng.random_range(HYPO_WIDTH_MIN.0..=HYPO_WIDTH_MIN.1),
            });
        }
    }

    let n = days * SAMPLES_PER_DAY;
    let step = DEFAULT_INTERVAL_MIN as f64;
    let mut values: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64 * step;
            let hour = (t / 60.0) % 24.0;
            let circadian = CIRCADIAN_AMPLITUDE
                * (2.0 * std::f64::consts::PI * (hour - CIRCADIAN_PEAK_HOUR + 6.0) / 24.0).sin();
            let meal: f64 = meals
                .iter()
                .map(|m| m.magnitude * meal_kernel(t - m.at_min))
                .sum();
            profile.basal_glucose + circadian + meal
        })
        .collect();

    // Each dip pulls the trace at its centre down to the drawn trough.
    for h in &hypos {
        let centre = ((h.at_min / step).round() as usize).min(n - 1);
        let depth = (values[centre] - h.magnitude).max(0.0);
        for (k, v) in values.iter_mut().enumerate() {
            let dt = k as f64 * step - h.at_min;
            if dt.abs() <= 4.0 * h.width_min {
                *v -= depth * (-0.5 * (dt / h.width_min).powi(2)).exp();
            }
        }
    }

    let start = series_start();
    let samples = values
        .into_iter()
        .enumerate()
        .map(|(k, v)| {
            let noise: f64 = rng.sample(StandardNormal);
            GlucoseSample {
                timestamp: start + Duration::minutes(k as i64 * DEFAULT_INTERVAL_MIN as i64),
                value: (v + profile.noise_std * noise).clamp(CLIP_RANGE.0, CLIP_RANGE.1),
            }
        })
        .collect();
    Ok(GlucoseSeries::new(patient_id, samples, DEFAULT_INTERVAL_MIN)
        .expect("generator emits an ordered, in-range series"))
}

/// Derives `n_patients` distinct profiles from one seed.
pub fn cohort_profiles(seed: u64, n_patients: usize) -> Vec<PatientProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_patients)
        .map(|_| PatientProfile {
            basal_glucose: rng.random_range(100.0..=140.0),
            meal_times: vec![
                rng.random_range(6.5..=8.5),
                rng.random_range(12.0..=14.0),
                rng.random_range(19.0..=21.0),
            ],
            meal_amplitude: rng.random_range(40.0..=80.0),
            hypo_rate: rng.random_range(0.5..=0.9),
            noise_std: rng.random_range(3.0..=6.0),
            seed: rng.random(),
        })
        .collect()
}

pub fn patient_id(index: usize) -> String {
    format!("patient{}", index + 1)
}

pub fn generate_cohort(
    seed: u64,
    n_patients: usize,
    days: usize,
) -> Result<Vec<GlucoseSeries>, SyntheticError> {
    if n_patients == 0 {
        return Err(SyntheticError::NoPatients);
    }
    cohort_profiles(seed, n_patients)
        .iter()
        .enumerate()
        .map(|(i, p)| generate_series(p, &patient_id(i), days))
        .collect()
}

/// Removes `holes` random stretches of `hours` (inclusive range, whole hours)
/// from the series, mimicking sensor failures.
pub fn inject_dropouts(
    series: &GlucoseSeries,
    holes: usize,
    hours: (u32, u32),
    seed: u64,
) -> GlucoseSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = series.samples();
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return series.clone();
    };
    let total_min = (last.timestamp - first.timestamp).num_minutes();
    let mut cut = Vec::with_capacity(holes);
    for _ in 0..holes {
        let len = rng.random_range(hours.0..=hours.1) as i64 * 60;
        let begin = rng.random_range(0..=total_min.max(1));
        cut.push((begin, begin + len));
    }
    let kept = samples
        .iter()
        .filter(|s| {
            let m = (s.timestamp - first.timestamp).num_minutes();
            !cut.iter().any(|&(a, b)| m >= a && m < b)
        })
        .copied()
        .collect();
    GlucoseSeries::new(series.patient_id.clone(), kept, series.nominal_interval_min)
        .expect("subset of a valid series")
}
