//! `cgm-hypo`: the synthetic-cohort → image → CNN workflow, one stage per
//! subcommand, plus `pipeline` to run them all.

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cgm_hypo::config::PipelineConfig;
use cgm_hypo::pipeline::{self, ColumnComparison, PipelineError};
use cgm_hypo::transforms;
use cgm_hypo::windowing;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

const TABLE2_FIXTURE: &str = include_str!("../fixtures/table2.csv");

#[derive(Parser)]
#[command(name = "cgm-hypo", version, about = "CGM traces to images and a dense-block CNN for next-day hypoglycemia")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline config file; every key is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic cohort, one CGM CSV per patient.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate CGM CSVs, report gaps and resample onto the regular grid.
    Ingest {
        #[command(flatten)]
        common: Common,
        /// CSV files or directories of CSV files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Patient id for a single input file; defaults to the file stem.
        #[arg(long)]
        patient_id: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cut resampled series into labeled windows.
    Window {
        #[command(flatten)]
        common: Common,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        patient_id: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render windows to image tensors.
    Transform {
        #[command(flatten)]
        common: Common,
        /// Output directory of `window`.
        #[arg(long)]
        windows: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write one PNG per image here.
        #[arg(long)]
        png: Option<PathBuf>,
    },
    /// Train models; writes `runNN/checkpoint` and `runNN/history.csv`.
    Train {
        #[command(flatten)]
        common: Common,
        /// Output directory of `transform`.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        runs: PathBuf,
        /// Train only this repetition (1-based); default all.
        #[arg(long)]
        repeat: Option<usize>,
        /// Overrides `experiment.repeats`.
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Evaluate saved runs; writes accuracy tables, box-plot data and tests.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Normality, variance and mean tests on two accuracy columns.
    Stats {
        /// Bundled data set; only `table2` exists.
        #[arg(long, conflicts_with = "input")]
        fixture: Option<String>,
        /// A per-phase accuracy CSV as written to `reports/table2.csv`.
        #[arg(long, required_unless_present = "fixture")]
        input: Option<PathBuf>,
        /// Two column names, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "Validation,Test")]
        columns: Vec<String>,
    },
    /// Every stage end to end into one output directory.
    Pipeline {
        #[command(flatten)]
        common: Common,
        /// Overrides `experiment.repeats`.
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{0}")]
    Usage(String),
}

/// Process exit status per error family.
fn exit_code(e: &CliError) -> u8 {
    match e {
        CliError::Usage(_) => 2,
        CliError::Pipeline(p) => match p {
            PipelineError::Config(_) => 3,
            PipelineError::Io { .. } => 4,
            PipelineError::Cgm(_) | PipelineError::Format(_) => 5,
            PipelineError::Window(_) => 6,
            PipelineError::Transform(_) => 7,
            PipelineError::Model(_) => 8,
            PipelineError::Train(_) => 9,
            PipelineError::Stats(_) => 10,
            PipelineError::Synthetic(_) => 11,
        },
    }
}

fn stdout_err(source: io::Error) -> CliError {
    PipelineError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    }
    .into()
}

fn load_config(common: &Common) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => pipeline::read_config(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.experiment.seed = seed;
    }
    Ok(cfg)
}

fn with_repeats(mut cfg: PipelineConfig, repeats: Option<usize>) -> Result<PipelineConfig, CliError> {
    if let Some(r) = repeats {
        cfg.experiment.repeats = r;
    }
    cfg.validate().map_err(PipelineError::from)?;
    Ok(cfg)
}

fn synth(cfg: &PipelineConfig, out: &Path, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cohort = pipeline::synthesize(cfg)?;
    pipeline::write_series_dir(out, &cohort)?;
    for s in &cohort {
        writeln!(stdout, "{}: {} samples", s.patient_id, s.len()).map_err(stdout_err)?;
    }
    Ok(())
}

fn ingest(
    cfg: &PipelineConfig,
    inputs: &[PathBuf],
    patient_id: Option<&str>,
    out: &Path,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let raw = pipeline::read_series(inputs, patient_id, cgm_hypo::cgm::DEFAULT_INTERVAL_MIN)?;
    let ingested: Vec<pipeline::Ingested> = raw
        .iter()
        .map(|s| pipeline::ingest(s, cfg))
        .collect::<Result<_, _>>()?;
    pipeline::write_ingested(out, &ingested)?;
    for i in &ingested {
        let missing: f64 = i.gaps.gaps.iter().map(|g| g.minutes()).sum();
        writeln!(
            stdout,
            "{}: {} grid samples, {} gaps, {:.0} min uncovered",
            i.series.patient_id,
            i.series.len(),
            i.gaps.gaps.len(),
            missing
        )
        .map_err(stdout_err)?;
    }
    Ok(())
}

fn window(
    cfg: &PipelineConfig,
    inputs: &[PathBuf],
    patient_id: Option<&str>,
    out: &Path,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let series = pipeline::read_series(inputs, patient_id, cfg.ingest.interval_min)?;
    let windows = pipeline::window_cohort(&series, cfg)?;
    pipeline::write_windows(out, &windows)?;
    writeln!(
        stdout,
        "{} windows, {:.1}% hypoglycemia",
        windows.len(),
        100.0 * windowing::hypo_fraction(&windows)
    )
    .map_err(stdout_err)?;
    Ok(())
}

fn transform(
    cfg: &PipelineConfig,
    windows: &Path,
    out: &Path,
    png: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let windows = pipeline::read_windows(windows)?;
    let examples = pipeline::render_examples(&windows, cfg)?;
    pipeline::write_dataset(out, &examples)?;
    if let Some(dir) = png {
        std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        for (i, e) in examples.iter().enumerate() {
            let path = dir.join(format!("{:05}_{}_{}.png", i + 1, e.patient_id, e.label));
            transforms::write_png(&e.image, &path).map_err(PipelineError::from)?;
        }
    }
    writeln!(stdout, "{} images", examples.len()).map_err(stdout_err)?;
    Ok(())
}

fn train(
    cfg: &PipelineConfig,
    dataset: &Path,
    runs: &Path,
    only: Option<usize>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let repeats: Vec<usize> = match only {
        Some(0) => return Err(CliError::Usage("--repeat is 1-based".into())),
        Some(r) => vec![r - 1],
        None => (0..cfg.experiment.repeats).collect(),
    };
    let examples = pipeline::read_dataset(dataset)?;
    for r in repeats {
        let split = pipeline::split_examples(examples.clone(), cfg, r)?;
        let (mut model, history) = pipeline::train_repeat(&split, cfg, r)?;
        pipeline::write_run(&pipeline::run_dir(runs, r), &mut model, &history)?;
        let last = history.epochs.last().expect("at least one epoch");
        writeln!(
            stdout,
            "run {:02}: loss {:.4}, train {:.2}%, validation {:.2}% ({:.1} s)",
            r + 1,
            last.train_loss,
            last.train_accuracy,
            last.validation_accuracy,
            history.wall_seconds
        )
        .map_err(stdout_err)?;
    }
    Ok(())
}

fn eval(cfg: &PipelineConfig, dataset: &Path, runs: &Path, out: &Path, stdout: &mut dyn Write) -> Result<(), CliError> {
    let examples = pipeline::read_dataset(dataset)?;
    let report = pipeline::evaluate_runs(&pipeline::list_runs(runs)?, &examples, cfg)?;
    pipeline::write_reports(out, &report)?;
    stdout.write_all(report.table2_csv().as_bytes()).map_err(stdout_err)?;
    Ok(())
}

fn stats(
    fixture: Option<&str>,
    input: Option<&Path>,
    columns: &[String],
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let text = match (fixture, input) {
        (Some("table2"), _) => TABLE2_FIXTURE.to_string(),
        (Some(other), _) => return Err(CliError::Usage(format!("unknown fixture `{other}`"))),
        (None, Some(path)) => pipeline::read_text(path)?,
        (None, None) => return Err(CliError::Usage("give --fixture or --input".into())),
    };
    let [a, b] = match columns {
        [a, b] => [a.as_str(), b.as_str()],
        _ => return Err(CliError::Usage("--columns takes exactly two names".into())),
    };
    let [ca, cb] = pipeline::read_phase_columns(&text, [a, b])?;
    let cmp = ColumnComparison::new(a, ca, b, cb);
    stdout.write_all(cmp.to_text().as_bytes()).map_err(stdout_err)?;
    Ok(())
}

fn run_pipeline(cfg: &PipelineConfig, out: &Path, stdout: &mut dyn Write) -> Result<(), CliError> {
    let report = pipeline::run(cfg, out, &mut |line| eprintln!("{line}"))?;
    stdout.write_all(report.table2_csv().as_bytes()).map_err(stdout_err)?;
    Ok(())
}

fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { common, out } => synth(&load_config(&common)?, &out, stdout),
        Command::Ingest {
            common,
            inputs,
            patient_id,
            out,
        } => ingest(&load_config(&common)?, &inputs, patient_id.as_deref(), &out, stdout),
        Command::Window {
            common,
            inputs,
            patient_id,
            out,
        } => window(&load_config(&common)?, &inputs, patient_id.as_deref(), &out, stdout),
        Command::Transform {
            common,
            windows,
            out,
            png,
        } => transform(&load_config(&common)?, &windows, &out, png.as_deref(), stdout),
        Command::Train {
            common,
            dataset,
            runs,
            repeat,
            repeats,
        } => train(&with_repeats(load_config(&common)?, repeats)?, &dataset, &runs, repeat, stdout),
        Command::Eval {
            common,
            dataset,
            runs,
            out,
        } => eval(&load_config(&common)?, &dataset, &runs, &out, stdout),
        Command::Stats { fixture, input, columns } => stats(fixture.as_deref(), input.as_deref(), &columns, stdout),
        Command::Pipeline { common, repeats, out } => run_pipeline(&with_repeats(load_config(&common)?, repeats)?, &out, stdout),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse(), &mut io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
