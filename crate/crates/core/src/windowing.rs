//! Sliding 24 h windows labeled by hypoglycemia in the following 24 h, and
//! train/validation/test partitioning.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cgm::{format_timestamp, parse_timestamp, GlucoseSeries};

#[derive(Debug, Error, PartialEq)]
pub enum WindowError {
    #[error("series has {have} grid slots, need at least {need}")]
    SeriesTooShort { have: usize, need: usize },
    #[error("lookahead span is empty")]
    EmptyLookahead,
    #[error("series is not on a regular {0}-minute grid")]
    IrregularSeries(u32),
    #[error("window, step and lookahead must be positive whole hours")]
    InvalidSpec,
    #[error("split fractions must be non-negative and sum to 1")]
    InvalidFractions,
    #[error("nothing to split")]
    EmptyInput,
    #[error("manifest line {0} is malformed")]
    BadManifest(usize),
}

/// Class index 0 is `Normal`, 1 is `Hypoglycemia`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Normal,
    Hypoglycemia,
}

impl Label {
    pub const COUNT: usize = 2;

    pub fn index(self) -> usize {
        match self {
            Label::Normal => 0,
            Label::Hypoglycemia => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Label::Normal),
            1 => Some(Label::Hypoglycemia),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Normal => "normal",
            Label::Hypoglycemia => "hypoglycemia",
        })
    }
}

impl FromStr for Label {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "normal" => Ok(Label::Normal),
            "hypoglycemia" => Ok(Label::Hypoglycemia),
            _ => Err(()),
        }
    }
}

/// Glycemic thresholds in mg/dL. Only `hypo` drives labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub hypo: f64,
    pub hyper: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            hypo: 70.0,
            hyper: 180.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub window_h: u32,
    pub step_h: u32,
    pub lookahead_h: u32,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            window_h: 24,
            step_h: 1,
            lookahead_h: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledWindow {
    pub patient_id: String,
    pub start_time: DateTime<Utc>,
    /// Glucose values of the input span, mg/dL.
    pub input: Vec<f64>,
    pub label: Label,
    /// Minimum glucose over the lookahead span.
    pub lookahead_min: f64,
}

/// `Hypoglycemia` iff some lookahead value is strictly below the threshold.
pub fn label_window(lookahead: &[f64], thresholds: &Thresholds) -> Result<Label, WindowError> {
    let min = lookahead
        .iter()
        .copied()
        .reduce(f64::min)
        .ok_or(WindowError::EmptyLookahead)?;
    Ok(if min < thresholds.hypo {
        Label::Hypoglycemia
    } else {
        Label::Normal
    })
}

/// Maps a regular-grid series onto slots; `None` marks a missing grid point.
fn grid_slots(series: &GlucoseSeries) -> Result<Vec<Option<f64>>, WindowError> {
    let interval = series.nominal_interval_min;
    let step_s = interval as i64 * 60;
    let samples = series.samples();
    let Some(first) = samples.first() else {
        return Ok(Vec::new());
    };
    let last = samples[samples.len() - 1].timestamp;
    let n = ((last - first.timestamp).num_seconds() / step_s) as usize + 1;
    let mut slots = vec![None; n];
    for s in samples {
        let off = (s.timestamp - first.timestamp).num_seconds();
        if off % step_s != 0 {
            return Err(WindowError::IrregularSeries(interval));
        }
        slots[(off / step_s) as usize] = Some(s.value);
    }
    Ok(slots)
}

/// Emits one window per `step_h` offset whose input and lookahead spans are
/// both fully present. Windows touching a missing grid point are skipped.
pub fn segment(
    series: &GlucoseSeries,
    spec: &WindowSpec,
    thresholds: &Thresholds,
) -> Result<Vec<LabeledWindow>, WindowError> {
    if spec.window_h == 0 || spec.step_h == 0 || spec.lookahead_h == 0 {
        return Err(WindowError::InvalidSpec);
    }
    let interval = series.nominal_interval_min;
    if interval == 0 || 60 % interval != 0 {
        return Err(WindowError::IrregularSeries(interval));
    }
    let per_hour = (60 / interval) as usize;
    let input_len = spec.window_h as usize * per_hour;
    let ahead_len = spec.lookahead_h as usize * per_hour;
    let step = spec.step_h as usize * per_hour;
    let need = input_len + ahead_len;

    let slots = grid_slots(series)?;
    if slots.len() < need {
        return Err(WindowError::SeriesTooShort {
            have: slots.len(),
            need,
        });
    }
    let start = series.samples()[0].timestamp;

    // missing[i] = number of absent slots in [0, i)
    let mut missing = vec![0usize; slots.len() + 1];
    for (i, s) in slots.iter().enumerate() {
        missing[i + 1] = missing[i] + usize::from(s.is_none());
    }

    let mut out = Vec::new();
    let mut offset = 0;
    while offset + need <= slots.len() {
        if missing[offset + need] == missing[offset] {
            let values: Vec<f64> = slots[offset..offset + need]
                .iter()
                .map(|v| v.expect("checked present"))
                .collect();
            let (input, ahead) = values.split_at(input_len);
            let label = label_window(ahead, thresholds)?;
            out.push(LabeledWindow {
                patient_id: series.patient_id.clone(),
                start_time: start + chrono::Duration::minutes((offset as u32 * interval) as i64),
                input: input.to_vec(),
                label,
                lookahead_min: ahead.iter().copied().fold(f64::INFINITY, f64::min),
            });
        }
        offset += step;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitStrategy {
    Random,
    Chronological,
    ByPatient,
}

impl FromStr for SplitStrategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(Self::Random),
            "chronological" => Ok(Self::Chronological),
            "by_patient" => Ok(Self::ByPatient),
            other => Err(format!("unknown split strategy `{other}`")),
        }
    }
}

impl fmt::Display for SplitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Random => "random",
            Self::Chronological => "chronological",
            Self::ByPatient => "by_patient",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
    pub strategy: SplitStrategy,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.75,
            validation: 0.15,
            test: 0.10,
            seed: 0,
            strategy: SplitStrategy::Random,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), WindowError> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|f| !(*f >= 0.0))
            || ((self.train + self.validation + self.test) - 1.0).abs() > 1e-9
        {
            return Err(WindowError::InvalidFractions);
        }
        Ok(())
    }

    /// Partition sizes for `n` items: train and validation are `round(n·f)`,
    /// test takes what is left.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let train = ((n as f64) * self.train).round() as usize;
        let train = train.min(n);
        let val = (((n as f64) * self.validation).round() as usize).min(n - train);
        (train, val, n - train - val)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub test: Vec<T>,
}

/// Anything that can be split needs a patient and a start time.
pub trait Splittable {
    fn patient_id(&self) -> &str;
    fn start_time(&self) -> DateTime<Utc>;
}

impl Splittable for LabeledWindow {
    fn patient_id(&self) -> &str {
        &self.patient_id
    }
    fn start_time(&self) -> DateTime<Utc> {
        self.start_time
    }
}

pub fn split<T: Splittable>(items: Vec<T>, spec: &SplitSpec) -> Result<Split<T>, WindowError> {
    spec.validate()?;
    if items.is_empty() {
        return Err(WindowError::EmptyInput);
    }
    let n = items.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    match spec.strategy {
        SplitStrategy::Random | SplitStrategy::Chronological => {
            let mut order: Vec<usize> = (0..n).collect();
            if spec.strategy == SplitStrategy::Random {
                order.shuffle(&mut rng);
            } else {
                order.sort_by(|&a, &b| {
                    items[a]
                        .start_time()
                        .cmp(&items[b].start_time())
                        .then_with(|| items[a].patient_id().cmp(items[b].patient_id()))
                });
            }
            let (n_train, n_val, _) = spec.sizes(n);
            let mut bucket = vec![0u8; n];
            for (rank, &i) in order.iter().enumerate() {
                bucket[i] = if rank < n_train {
                    0
                } else if rank < n_train + n_val {
                    1
                } else {
                    2
                };
            }
            // Preserve the shuffled/chronological order inside each part.
            let mut slots: Vec<Option<T>> = items.into_iter().map(Some).collect();
            let mut parts: [Vec<T>; 3] = [Vec::new(), Vec::new(), Vec::new()];
            for &i in &order {
                parts[bucket[i] as usize].push(slots[i].take().expect("each index once"));
            }
            let [train, validation, test] = parts;
            Ok(Split {
                train,
                validation,
                test,
            })
        }
        SplitStrategy::ByPatient => {
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for it in &items {
                *counts.entry(it.patient_id().to_string()).or_default() += 1;
            }
            let mut patients: Vec<String> = counts.keys().cloned().collect();
            patients.shuffle(&mut rng);
            let (t0, t1, t2) = spec.sizes(n);
            let targets = [t0 as f64, t1 as f64, t2 as f64];
            let mut filled = [0.0f64; 3];
            let mut assignment: BTreeMap<String, usize> = BTreeMap::new();
            for p in patients {
                // Greedy: give the patient to the partition furthest below target.
                let part = (0..3)
                    .max_by(|&a, &b| {
                        (targets[a] - filled[a])
                            .partial_cmp(&(targets[b] - filled[b]))
                            .unwrap()
                            .then(b.cmp(&a))
                    })
                    .unwrap();
                filled[part] += counts[&p] as f64;
                assignment.insert(p, part);
            }
            let mut parts: [Vec<T>; 3] = [Vec::new(), Vec::new(), Vec::new()];
            for it in items {
                let part = assignment[it.patient_id()];
                parts[part].push(it);
            }
            let [train, validation, test] = parts;
            Ok(Split {
                train,
                validation,
                test,
            })
        }
    }
}

/// One audit row per window: `patient_id,start_time,label,lookahead_min`.
pub fn write_manifest(windows: &[LabeledWindow]) -> String {
    let mut out = String::from("patient_id,start_time,label,lookahead_min\n");
    for w in windows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            w.patient_id,
            format_timestamp(&w.start_time),
            w.label,
            w.lookahead_min
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub patient_id: String,
    pub start_time: DateTime<Utc>,
    pub label: Label,
    pub lookahead_min: f64,
}

pub fn read_manifest(text: &str) -> Result<Vec<ManifestRow>, WindowError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "patient_id,start_time,label,lookahead_min" => {}
        _ => return Err(WindowError::BadManifest(1)),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let bad = || WindowError::BadManifest(i + 1);
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 4 {
                return Err(bad());
            }
            Ok(ManifestRow {
                patient_id: f[0].to_string(),
                start_time: parse_timestamp(f[1]).ok_or_else(bad)?,
                label: f[2].parse().map_err(|_| bad())?,
                lookahead_min: f[3].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Fraction of windows labeled `Hypoglycemia`.
pub fn hypo_fraction(windows: &[LabeledWindow]) -> f64 {
    if windows.is_empty() {
        return 0.0;
    }
    windows
        .iter()
        .filter(|w| w.label == Label::Hypoglycemia)
        .count() as f64
        / windows.len() as f64
}

/// Distinct patients in a set of items.
pub fn patients<T: Splittable>(items: &[T]) -> BTreeSet<String> {
    items.iter().map(|i| i.patient_id().to_string()).collect()
}
