//! Checkpoint directory: `manifest.txt` (format tag, version, model config,
//! tensor table) and `params.bin` (little-endian f32 values in table order).

use std::fs;
use std::path::Path;

use super::{Model, ModelConfig, ModelError, TransitionPool};
use crate::nn::Real;

pub const CHECKPOINT_VERSION: u32 = 1;
const FORMAT_TAG: &str = "cgm-hypo-checkpoint";
const MANIFEST: &str = "manifest.txt";
const BLOB: &str = "params.bin";

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    kind: &'static str,
    name: String,
    shape: Vec<usize>,
}

fn shape_str(shape: &[usize]) -> String {
    shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
}

fn entries_and_values<T: Real>(model: &mut Model<T>) -> (Vec<Entry>, Vec<f32>) {
    let mut entries = Vec::new();
    let mut values = Vec::new();
    let entries_cell = std::cell::RefCell::new((&mut entries, &mut values));
    model.visit_all(
        "",
        &mut |name, p| {
            let mut guard = entries_cell.borrow_mut();
            guard.0.push(Entry {
                kind: "param",
                name: name.to_string(),
                shape: p.shape.clone(),
            });
            guard.1.extend(p.value.iter().map(|v| v.to_f32().unwrap_or(f32::NAN)));
        },
        &mut |name, b| {
            let mut guard = entries_cell.borrow_mut();
            guard.0.push(Entry {
                kind: "buffer",
                name: name.to_string(),
                shape: b.shape.clone(),
            });
            guard.1.extend(b.value.iter().map(|v| v.to_f32().unwrap_or(f32::NAN)));
        },
    );
    (entries, values)
}

fn config_lines(c: &ModelConfig) -> String {
    let layout = c.block_layout.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
    format!(
        "input_size = {}\ngrowth_rate = {}\nblock_layout = {layout}\nhead_units = {}\nn_classes = {}\nseed = {}\ntransition_pool = {}\n",
        c.input_size, c.growth_rate, c.head_units, c.n_classes, c.seed, c.transition_pool
    )
}

pub fn save<T: Real>(model: &mut Model<T>, dir: &Path) -> Result<(), ModelError> {
    fs::create_dir_all(dir)?;
    let (entries, values) = entries_and_values(model);
    let mut manifest = format!("{FORMAT_TAG}\nversion = {CHECKPOINT_VERSION}\n\n[config]\n");
    manifest.push_str(&config_lines(model.config()));
    manifest.push_str("\n[tensors]\n");
    for e in &entries {
        manifest.push_str(&format!("{} {} {}\n", e.kind, e.name, shape_str(&e.shape)));
    }
    let mut blob = Vec::with_capacity(values.len() * 4);
    for v in values {
        blob.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(dir.join(MANIFEST), manifest)?;
    fs::write(dir.join(BLOB), blob)?;
    Ok(())
}

fn corrupt(msg: impl Into<String>) -> ModelError {
    ModelError::CorruptCheckpoint(msg.into())
}

fn parse_config(lines: &[&str]) -> Result<ModelConfig, ModelError> {
    let mut c = ModelConfig::desk();
    let mut seen = Vec::new();
    for line in lines {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| corrupt(format!("bad config line `{line}`")))?;
        let (k, v) = (k.trim(), v.trim());
        let num = |v: &str| v.parse::<usize>().map_err(|_| corrupt(format!("bad value for {k}: `{v}`")));
        match k {
            "input_size" => c.input_size = num(v)?,
            "growth_rate" => c.growth_rate = num(v)?,
            "head_units" => c.head_units = num(v)?,
            "n_classes" => c.n_classes = num(v)?,
            "seed" => c.seed = v.parse().map_err(|_| corrupt(format!("bad seed `{v}`")))?,
            "transition_pool" => c.transition_pool = v.parse::<TransitionPool>().map_err(corrupt)?,
            "block_layout" => {
                c.block_layout = v.split(',').map(|s| num(s.trim())).collect::<Result<_, _>>()?;
            }
            other => return Err(corrupt(format!("unknown config key `{other}`"))),
        }
        seen.push(k.to_string());
    }
    for key in [
        "input_size",
        "growth_rate",
        "block_layout",
        "head_units",
        "n_classes",
        "seed",
        "transition_pool",
    ] {
        if !seen.iter().any(|s| s == key) {
            return Err(corrupt(format!("missing config key `{key}`")));
        }
    }
    Ok(c)
}

fn parse_entry(line: &str) -> Result<(String, String, Vec<usize>), ModelError> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(corrupt(format!("bad tensor line `{line}`")));
    }
    let shape = parts[2]
        .split('x')
        .map(|d| d.parse::<usize>().map_err(|_| corrupt(format!("bad shape `{}`", parts[2]))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((parts[0].to_string(), parts[1].to_string(), shape))
}

/// Restores a model. The manifest and blob are fully validated against the
/// architecture the stored config describes before any value is written.
pub fn load<T: Real>(dir: &Path) -> Result<Model<T>, ModelError> {
    let manifest = fs::read_to_string(dir.join(MANIFEST))?;
    let mut lines = manifest.lines();
    if lines.next().map(str::trim) != Some(FORMAT_TAG) {
        return Err(corrupt("missing format tag"));
    }
    let version_line = lines.next().unwrap_or("");
    let found = version_line
        .split_once('=')
        .filter(|(k, _)| k.trim() == "version")
        .map(|(_, v)| v.trim().to_string())
        .ok_or_else(|| corrupt("missing version line"))?;
    if found != CHECKPOINT_VERSION.to_string() {
        return Err(ModelError::VersionMismatch {
            found,
            expected: CHECKPOINT_VERSION,
        });
    }

    let mut section = "";
    let mut config_lines = Vec::new();
    let mut tensor_lines = Vec::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "[config]" | "[tensors]" => section = line,
            _ if section == "[config]" => config_lines.push(line),
            _ if section == "[tensors]" => tensor_lines.push(line),
            _ => return Err(corrupt(format!("line outside a section: `{line}`"))),
        }
    }
    let config = parse_config(&config_lines).map_err(|e| match e {
        ModelError::CorruptCheckpoint(_) => e,
        other => corrupt(other.to_string()),
    })?;
    let mut model = Model::<T>::build(&config).map_err(|e| corrupt(e.to_string()))?;

    let (expected, _) = entries_and_values(&mut model);
    if tensor_lines.len() != expected.len() {
        return Err(corrupt(format!(
            "{} tensors listed, architecture has {}",
            tensor_lines.len(),
            expected.len()
        )));
    }
    for (line, e) in tensor_lines.iter().zip(&expected) {
        let (kind, name, shape) = parse_entry(line)?;
        if kind != e.kind || name != e.name || shape != e.shape {
            return Err(corrupt(format!(
                "tensor `{line}` does not match expected {} {} {}",
                e.kind,
                e.name,
                shape_str(&e.shape)
            )));
        }
    }
    let total: usize = expected.iter().map(|e| e.shape.iter().product::<usize>()).sum();
    let blob = fs::read(dir.join(BLOB))?;
    if blob.len() != total * 4 {
        return Err(corrupt(format!(
            "params.bin holds {} bytes, expected {}",
            blob.len(),
            total * 4
        )));
    }
    let mut values = blob
        .chunks_exact(4)
        .map(|b| T::from_f32(f32::from_le_bytes([b[0], b[1], b[2], b[3]])).unwrap_or(T::nan()));
    let values_cell = std::cell::RefCell::new(&mut values);
    model.visit_all(
        "",
        &mut |_, p| {
            let mut it = values_cell.borrow_mut();
            for v in p.value.iter_mut() {
                *v = it.next().expect("length checked");
            }
        },
        &mut |_, b| {
            let mut it = values_cell.borrow_mut();
            for v in b.value.iter_mut() {
                *v = it.next().expect("length checked");
            }
        },
    );
    Ok(model)
}
