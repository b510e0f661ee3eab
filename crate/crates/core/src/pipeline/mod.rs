//! End-to-end workflow: synthetic cohort → ingest → windows → images →
//! repeated training → reports. Every stage reads and writes plain files so
//! the stages can also be run one at a time.

mod report;

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cgm::{self, CgmError, GapReport, GlucoseSeries};
use crate::config::{ConfigError, PipelineConfig};
use crate::model::{self, Model, ModelError};
use crate::stats::StatsError;
use crate::synthetic::{self, SyntheticError};
use crate::training::{self, DatasetTag, Example, RunHistory, TrainError};
use crate::transforms::{self, ImageTensor, TransformError};
use crate::windowing::{self, LabeledWindow, Split, WindowError};

pub use self::report::{read_phase_columns, ColumnComparison, ExperimentReport, Phase, RepeatOutcome, REPORT_DDOF};

pub const CONFIG_FILE: &str = "config.toml";
pub const COHORT_DIR: &str = "cohort";
pub const INGEST_DIR: &str = "ingest";
pub const SERIES_DIR: &str = "series";
pub const GAPS_FILE: &str = "gaps.csv";
pub const WINDOWS_DIR: &str = "windows";
pub const MANIFEST_FILE: &str = "manifest.csv";
pub const VALUES_FILE: &str = "values.f64";
pub const DATASET_DIR: &str = "dataset";
pub const DATASET_FILE: &str = "dataset.csv";
pub const IMAGES_FILE: &str = "images.f32";
pub const RUNS_DIR: &str = "runs";
pub const CHECKPOINT_DIR: &str = "checkpoint";
pub const HISTORY_FILE: &str = "history.csv";
pub const REPORTS_DIR: &str = "reports";
pub const TABLE2_FILE: &str = "table2.csv";
pub const TABLE3_FILE: &str = "table3.csv";
pub const BOXPLOT_PHASES_FILE: &str = "boxplot_phases.csv";
pub const BOXPLOT_PATIENTS_FILE: &str = "boxplot_patients.csv";
pub const STATS_FILE: &str = "stats.txt";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Cgm(#[from] CgmError),
    #[error(transparent)]
    Synthetic(#[from] SyntheticError),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_text(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn read_config(path: &Path) -> Result<PipelineConfig, PipelineError> {
    Ok(PipelineConfig::parse(&read_text(path)?)?)
}

/// Independent random streams derived from the experiment seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStream {
    Cohort = 1,
    Dropouts = 2,
    Split = 3,
    ModelInit = 4,
    Shuffle = 5,
}

pub fn derive_seed(base: u64, stream: SeedStream, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream as u64);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

/// Orders `patient2` before `patient10`.
pub fn natural_key(id: &str) -> (String, u64, String) {
    let digits = id.len() - id.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    let (stem, num) = id.split_at(id.len() - digits);
    (stem.to_string(), num.parse().unwrap_or(0), id.to_string())
}

/// Seeded synthetic cohort with random sensor dropouts.
pub fn synthesize(cfg: &PipelineConfig) -> Result<Vec<GlucoseSeries>, PipelineError> {
    let s = &cfg.synthetic;
    let seed = cfg.experiment.seed;
    let cohort = synthetic::generate_cohort(derive_seed(seed, SeedStream::Cohort, 0), s.patients, s.days)?;
    Ok(cohort
        .iter()
        .enumerate()
        .map(|(i, series)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, SeedStream::Dropouts, i as u64));
            let holes = rng.random_range(s.dropouts_min..=s.dropouts_max);
            synthetic::inject_dropouts(
                series,
                holes,
                (s.dropout_hours_min, s.dropout_hours_max),
                rng.next_u64(),
            )
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub series: GlucoseSeries,
    pub gaps: GapReport,
}

/// Reports unfillable holes, then places the series on the regular grid.
pub fn ingest(raw: &GlucoseSeries, cfg: &PipelineConfig) -> Result<Ingested, PipelineError> {
    let i = &cfg.ingest;
    let gaps = cgm::detect_gaps(raw, i.max_fill_min.max(raw.nominal_interval_min as f64))?;
    let series = cgm::resample(raw, i.interval_min, i.max_fill_min)?;
    Ok(Ingested { series, gaps })
}

pub fn window_cohort(series: &[GlucoseSeries], cfg: &PipelineConfig) -> Result<Vec<LabeledWindow>, PipelineError> {
    let (spec, thresholds) = (cfg.window_spec(), cfg.thresholds());
    let mut out = Vec::new();
    for s in series {
        out.extend(windowing::segment(s, &spec, &thresholds)?);
    }
    Ok(out)
}

pub fn render_examples(windows: &[LabeledWindow], cfg: &PipelineConfig) -> Result<Vec<Example>, PipelineError> {
    let tcfg = cfg.transform_config()?;
    windows
        .iter()
        .map(|w| {
            Ok(Example {
                patient_id: w.patient_id.clone(),
                start_time: w.start_time,
                label: w.label,
                image: transforms::render(&w.input, &tcfg)?,
            })
        })
        .collect()
}

/// The partition used by repetition `repeat`; shared by all repetitions
/// unless `split.reshuffle_per_repeat` is set.
pub fn split_examples(
    examples: Vec<Example>,
    cfg: &PipelineConfig,
    repeat: usize,
) -> Result<Split<Example>, PipelineError> {
    let index = if cfg.split.reshuffle_per_repeat { repeat as u64 } else { 0 };
    let spec = cfg.split_spec(derive_seed(cfg.experiment.seed, SeedStream::Split, index))?;
    Ok(windowing::split(examples, &spec)?)
}

pub fn train_repeat(
    split: &Split<Example>,
    cfg: &PipelineConfig,
    repeat: usize,
) -> Result<(Model<f32>, RunHistory), PipelineError> {
    let seed = cfg.experiment.seed;
    let mcfg = cfg.model_config(derive_seed(seed, SeedStream::ModelInit, repeat as u64))?;
    let tcfg = cfg.train_config(derive_seed(seed, SeedStream::Shuffle, repeat as u64));
    let mut model = Model::<f32>::build(&mcfg)?;
    let history = training::train(&mut model, &split.train, &split.validation, &tcfg)?;
    Ok((model, history))
}

pub fn evaluate_repeat(model: &mut Model<f32>, split: &Split<Example>) -> Result<RepeatOutcome, PipelineError> {
    let acc = |m: &mut Model<f32>, data: &[Example], tag| -> Result<f64, PipelineError> {
        Ok(training::evaluate(m, data, tag)?.accuracy())
    };
    Ok(RepeatOutcome {
        training: acc(model, &split.train, DatasetTag::Train)?,
        validation: acc(model, &split.validation, DatasetTag::Validation)?,
        test: acc(model, &split.test, DatasetTag::Test)?,
        per_patient: training::evaluate_by_patient(model, &split.test, DatasetTag::Test)?
            .into_iter()
            .map(|m| (m.patient_id.clone().unwrap_or_default(), m.accuracy()))
            .collect(),
    })
}


/// Writes one `<patient_id>.csv` per series.
pub fn write_series_dir(dir: &Path, series: &[GlucoseSeries]) -> Result<(), PipelineError> {
    for s in series {
        write_file(&dir.join(format!("{}.csv", s.patient_id)), cgm::write_cgm_csv(s))?;
    }
    Ok(())
}

/// Expands directories to their `*.csv` files.
pub fn csv_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, PipelineError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            for entry in fs::read_dir(p).map_err(io_err(p))? {
                let path = entry.map_err(io_err(p))?.path();
                if path.extension().is_some_and(|e| e == "csv") {
                    out.push(path);
                }
            }
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Reads CGM CSVs, taking each patient id from the file stem unless
/// `patient_id` is given, and returns them in natural patient order.
pub fn read_series(
    paths: &[PathBuf],
    patient_id: Option<&str>,
    interval_min: u32,
) -> Result<Vec<GlucoseSeries>, PipelineError> {
    let files = csv_inputs(paths)?;
    if patient_id.is_some() && files.len() != 1 {
        return Err(PipelineError::Format("--patient-id needs exactly one input file".into()));
    }
    let mut out = Vec::with_capacity(files.len());
    for f in &files {
        let stem = f.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let id = patient_id.unwrap_or(stem);
        let parsed = cgm::parse_cgm_csv(&read_text(f)?, id)?;
        out.push(GlucoseSeries::new(id, parsed.into_samples(), interval_min)?);
    }
    out.sort_by_key(|s| natural_key(&s.patient_id));
    Ok(out)
}

pub fn gaps_csv(ingested: &[Ingested]) -> String {
    let mut s = String::from("patient_id,gap_start,gap_end,minutes\n");
    for i in ingested {
        for g in &i.gaps.gaps {
            s.push_str(&format!(
                "{},{},{},{}\n",
                i.series.patient_id,
                cgm::format_timestamp(&g.start),
                cgm::format_timestamp(&g.end),
                g.minutes()
            ));
        }
    }
    s
}

pub fn write_ingested(dir: &Path, ingested: &[Ingested]) -> Result<(), PipelineError> {
    let series: Vec<GlucoseSeries> = ingested.iter().map(|i| i.series.clone()).collect();
    write_series_dir(&dir.join(SERIES_DIR), &series)?;
    write_file(&dir.join(GAPS_FILE), gaps_csv(ingested))
}

fn f64_blob(values: impl Iterator<Item = f64>) -> Vec<u8> {
    values.flat_map(f64::to_le_bytes).collect()
}

/// `manifest.csv` plus the raw input spans as little-endian f64.
pub fn write_windows(dir: &Path, windows: &[LabeledWindow]) -> Result<(), PipelineError> {
    write_file(&dir.join(MANIFEST_FILE), windowing::write_manifest(windows))?;
    write_file(
        &dir.join(VALUES_FILE),
        f64_blob(windows.iter().flat_map(|w| w.input.iter().copied())),
    )
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, PipelineError> {
    fs::read(path).map_err(io_err(path))
}

pub fn read_windows(dir: &Path) -> Result<Vec<LabeledWindow>, PipelineError> {
    let rows = windowing::read_manifest(&read_text(&dir.join(MANIFEST_FILE))?)?;
    let blob = read_bytes(&dir.join(VALUES_FILE))?;
    if rows.is_empty() || blob.len() % (8 * rows.len()) != 0 {
        return Err(PipelineError::Format(format!(
            "{} bytes of window values do not divide into {} windows",
            blob.len(),
            rows.len()
        )));
    }
    let per = blob.len() / 8 / rows.len();
    let values: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(rows
        .into_iter()
        .zip(values.chunks_exact(per))
        .map(|(r, v)| LabeledWindow {
            patient_id: r.patient_id,
            start_time: r.start_time,
            input: v.to_vec(),
            label: r.label,
            lookahead_min: r.lookahead_min,
        })
        .collect())
}

/// `dataset.csv` (one row per image) plus the pixels as little-endian f32.
pub fn write_dataset(dir: &Path, examples: &[Example]) -> Result<(), PipelineError> {
    let mut csv = String::from("patient_id,start_time,label,height,width,channels\n");
    let mut blob = Vec::new();
    for e in examples {
        let img = &e.image;
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.patient_id,
            cgm::format_timestamp(&e.start_time),
            e.label,
            img.height,
            img.width,
            img.channels
        ));
        blob.extend(img.data.iter().flat_map(|v| v.to_le_bytes()));
    }
    write_file(&dir.join(DATASET_FILE), csv)?;
    write_file(&dir.join(IMAGES_FILE), blob)
}

pub fn read_dataset(dir: &Path) -> Result<Vec<Example>, PipelineError> {
    let text = read_text(&dir.join(DATASET_FILE))?;
    let blob = read_bytes(&dir.join(IMAGES_FILE))?;
    let mut lines = text.lines();
    if lines.next() != Some("patient_id,start_time,label,height,width,channels") {
        return Err(PipelineError::Format("dataset.csv: bad header".into()));
    }
    let mut offset = 0;
    let mut out = Vec::new();
    for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let bad = || PipelineError::Format(format!("dataset.csv line {}: malformed", i + 2));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad());
        }
        let dims: Vec<usize> = f[3..].iter().map(|d| d.parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        let len = dims[0] * dims[1] * dims[2] * 4;
        let bytes = blob.get(offset..offset + len).ok_or_else(|| {
            PipelineError::Format("images.f32 is shorter than dataset.csv implies".into())
        })?;
        offset += len;
        out.push(Example {
            patient_id: f[0].to_string(),
            start_time: cgm::parse_timestamp(f[1]).ok_or_else(bad)?,
            label: f[2].parse().map_err(|_| bad())?,
            image: ImageTensor {
                height: dims[0],
                width: dims[1],
                channels: dims[2],
                data: bytes
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
                    .collect(),
            },
        });
    }
    if offset != blob.len() {
        return Err(PipelineError::Format("images.f32 is longer than dataset.csv implies".into()));
    }
    Ok(out)
}

pub fn run_dir(runs: &Path, repeat: usize) -> PathBuf {
    runs.join(format!("run{:02}", repeat + 1))
}

pub fn write_run(dir: &Path, model: &mut Model<f32>, history: &RunHistory) -> Result<(), PipelineError> {
    model::save(model, &dir.join(CHECKPOINT_DIR))?;
    write_file(&dir.join(HISTORY_FILE), history.to_csv())
}

/// `runNN` subdirectories as `(repeat index, path)`, in order.
pub fn list_runs(runs: &Path) -> Result<Vec<(usize, PathBuf)>, PipelineError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(runs).map_err(io_err(runs))? {
        let path = entry.map_err(io_err(runs))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if let Some(n) = name.strip_prefix("run").and_then(|d| d.parse::<usize>().ok()) {
            if n >= 1 && path.is_dir() {
                out.push((n - 1, path));
            }
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(PipelineError::Format(format!("no runNN directories in {}", runs.display())));
    }
    Ok(out)
}

/// Evaluates saved checkpoints against the partitions they were trained on.
pub fn evaluate_runs(
    runs: &[(usize, PathBuf)],
    examples: &[Example],
    cfg: &PipelineConfig,
) -> Result<ExperimentReport, PipelineError> {
    let mut report = ExperimentReport::default();
    for (repeat, dir) in runs {
        let mut model = model::load::<f32>(&dir.join(CHECKPOINT_DIR))?;
        let split = split_examples(examples.to_vec(), cfg, *repeat)?;
        report.repeats.push(evaluate_repeat(&mut model, &split)?);
    }
    Ok(report)
}

pub fn write_reports(dir: &Path, report: &ExperimentReport) -> Result<(), PipelineError> {
    write_file(&dir.join(TABLE2_FILE), report.table2_csv())?;
    write_file(&dir.join(TABLE3_FILE), report.table3_csv())?;
    write_file(&dir.join(BOXPLOT_PHASES_FILE), report.boxplot_phases_csv())?;
    write_file(&dir.join(BOXPLOT_PATIENTS_FILE), report.boxplot_patients_csv())?;
    write_file(&dir.join(STATS_FILE), report.comparison().to_text())
}

/// Runs every stage into `out`, writing each stage's files on the way.
pub fn run(cfg: &PipelineConfig, out: &Path, log: &mut dyn FnMut(&str)) -> Result<ExperimentReport, PipelineError> {
    cfg.validate()?;
    write_file(&out.join(CONFIG_FILE), cfg.to_text())?;

    let cohort = synthesize(cfg)?;
    write_series_dir(&out.join(COHORT_DIR), &cohort)?;
    log(&format!("synth: {} patients", cohort.len()));

    let ingested: Vec<Ingested> = cohort.iter().map(|s| ingest(s, cfg)).collect::<Result<_, _>>()?;
    write_ingested(&out.join(INGEST_DIR), &ingested)?;
    let gaps: usize = ingested.iter().map(|i| i.gaps.gaps.len()).sum();
    log(&format!("ingest: {gaps} gaps"));

    let series: Vec<GlucoseSeries> = ingested.into_iter().map(|i| i.series).collect();
    let windows = window_cohort(&series, cfg)?;
    write_windows(&out.join(WINDOWS_DIR), &windows)?;
    log(&format!(
        "window: {} windows, {:.1}% hypoglycemia",
        windows.len(),
        100.0 * windowing::hypo_fraction(&windows)
    ));

    let examples = render_examples(&windows, cfg)?;
    write_dataset(&out.join(DATASET_DIR), &examples)?;
    log(&format!("transform: {} images", examples.len()));

    let runs = out.join(RUNS_DIR);
    let mut report = ExperimentReport::default();
    for repeat in 0..cfg.experiment.repeats {
        let split = split_examples(examples.clone(), cfg, repeat)?;
        let (mut model, history) = train_repeat(&split, cfg, repeat)?;
        write_run(&run_dir(&runs, repeat), &mut model, &history)?;
        let outcome = evaluate_repeat(&mut model, &split)?;
        log(&format!(
            "train {}/{}: training {:.2} validation {:.2} test {:.2} ({:.1} s)",
            repeat + 1,
            cfg.experiment.repeats,
            outcome.training,
            outcome.validation,
            outcome.test,
            history.wall_seconds
        ));
        report.repeats.push(outcome);
    }
    write_reports(&out.join(REPORTS_DIR), &report)?;
    Ok(report)
}
