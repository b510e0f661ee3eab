//! Adam optimisation, the fixed-epoch training loop, and evaluation.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{Model, ModelError};
use crate::nn::{softmax_cross_entropy, Mode, NnError, Real, Tensor};
use crate::transforms::ImageTensor;
use crate::windowing::{Label, Splittable};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<NnError> for TrainError {
    fn from(e: NnError) -> Self {
        Self::Model(ModelError::Nn(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update at step `t` (1-based).
pub fn adam_step<T: Real>(
    params: &mut [T],
    grads: &[T],
    m: &mut [T],
    v: &mut [T],
    t: u64,
    cfg: &AdamConfig,
) -> Result<(), TrainError> {
    let n = params.len();
    if grads.len() != n || m.len() != n || v.len() != n {
        return Err(TrainError::ShapeMismatch(format!(
            "adam: params {n}, grads {}, m {}, v {}",
            grads.len(),
            m.len(),
            v.len()
        )));
    }
    let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
    let c1 = T::one() / (T::one() - T::lit(cfg.beta1.powf(t as f64)));
    let c2 = T::one() / (T::one() - T::lit(cfg.beta2.powf(t as f64)));
    let (lr, eps) = (T::lit(cfg.learning_rate), T::lit(cfg.epsilon));
    for i in 0..n {
        let g = grads[i];
        m[i] = b1 * m[i] + (T::one() - b1) * g;
        v[i] = b2 * v[i] + (T::one() - b2) * g * g;
        let m_hat = m[i] * c1;
        let v_hat = v[i] * c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// Moment estimates for every model parameter, in visit order.
#[derive(Debug, Clone, Default)]
pub struct AdamState<T> {
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new() -> Self {
        Self {
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
        }
    }

    /// Increments `t`, then updates every parameter from its gradient.
    pub fn step(&mut self, model: &mut Model<T>, cfg: &AdamConfig) -> Result<(), TrainError> {
        self.t += 1;
        let t = self.t;
        let (ms, vs) = (&mut self.m, &mut self.v);
        let mut i = 0;
        let mut result = Ok(());
        model.visit_params("", &mut |_, p| {
            if ms.len() == i {
                ms.push(vec![T::zero(); p.len()]);
                vs.push(vec![T::zero(); p.len()]);
            }
            if result.is_ok() {
                result = adam_step(&mut p.value, &p.grad, &mut ms[i], &mut vs[i], t, cfg);
            }
            i += 1;
        });
        result
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 64,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.into()));
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.adam.learning_rate > 0.0 && self.adam.learning_rate.is_finite()) {
            return bad("learning rate must be > 0");
        }
        if !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) {
            return bad("adam betas must lie in [0, 1)");
        }
        if !(self.adam.epsilon > 0.0) {
            return bad("adam epsilon must be > 0");
        }
        Ok(())
    }
}

/// One rendered window ready for the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub patient_id: String,
    pub start_time: DateTime<Utc>,
    pub label: Label,
    pub image: ImageTensor,
}

impl Splittable for Example {
    fn patient_id(&self) -> &str {
        &self.patient_id
    }
    fn start_time(&self) -> DateTime<Utc> {
        self.start_time
    }
}

fn batch_tensor<T: Real>(examples: &[&Example], size: usize) -> Result<Tensor<T>, TrainError> {
    let mut data = Vec::with_capacity(examples.len() * size * size * 3);
    for e in examples {
        let img = &e.image;
        if (img.height, img.width, img.channels) != (size, size, 3) {
            return Err(TrainError::ShapeMismatch(format!(
                "image {}x{}x{} does not match model input {size}x{size}x3",
                img.height, img.width, img.channels
            )));
        }
        data.extend(img.data.iter().map(|&v| T::from_f32(v).unwrap_or(T::nan())));
    }
    Ok(Tensor::from_vec([examples.len(), size, size, 3], data)?)
}

fn one_hot<T: Real>(examples: &[&Example]) -> Vec<T> {
    let mut y = vec![T::zero(); examples.len() * Label::COUNT];
    for (i, e) in examples.iter().enumerate() {
        y[i * Label::COUNT + e.label.index()] = T::one();
    }
    y
}

/// Class with the larger probability; ties go to class 0.
pub fn predicted_class<T: Real>(row: &[T]) -> usize {
    if row[1] > row[0] {
        1
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DatasetTag {
    Train,
    Validation,
    Test,
}

impl fmt::Display for DatasetTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Train => "train",
            Self::Validation => "validation",
            Self::Test => "test",
        })
    }
}

impl FromStr for DatasetTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "train" => Ok(Self::Train),
            "validation" => Ok(Self::Validation),
            "test" => Ok(Self::Test),
            other => Err(format!("unknown dataset tag `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metrics {
    pub tag: DatasetTag,
    pub patient_id: Option<String>,
    /// `confusion[actual][predicted]`.
    pub confusion: [[usize; 2]; 2],
}

impl Metrics {
    pub fn new(tag: DatasetTag, patient_id: Option<String>) -> Self {
        Self {
            tag,
            patient_id,
            confusion: [[0; 2]; 2],
        }
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    /// Percent correct.
    pub fn accuracy(&self) -> f64 {
        let correct = self.confusion[0][0] + self.confusion[1][1];
        100.0 * correct as f64 / self.total() as f64
    }
}

/// Eval-mode predicted class of every example, in order.
pub fn predict<T: Real>(model: &mut Model<T>, data: &[Example], batch_size: usize) -> Result<Vec<usize>, TrainError> {
    let size = model.config().input_size;
    let mut out = Vec::with_capacity(data.len());
    for chunk in data.chunks(batch_size.max(1)) {
        let refs: Vec<&Example> = chunk.iter().collect();
        let probs = model.predict_proba(&batch_tensor::<T>(&refs, size)?, Mode::Eval)?;
        out.extend(probs.data().chunks(2).map(predicted_class));
    }
    Ok(out)
}

pub const EVAL_BATCH: usize = 64;

pub fn evaluate<T: Real>(model: &mut Model<T>, data: &[Example], tag: DatasetTag) -> Result<Metrics, TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let preds = predict(model, data, EVAL_BATCH)?;
    Ok(confusion(data, &preds, tag, None))
}

/// Builds metrics from predictions; `patient` restricts to one patient.
pub fn confusion(data: &[Example], preds: &[usize], tag: DatasetTag, patient: Option<&str>) -> Metrics {
    let mut m = Metrics::new(tag, patient.map(str::to_string));
    for (e, &p) in data.iter().zip(preds) {
        if patient.is_none_or(|id| id == e.patient_id) {
            m.confusion[e.label.index()][p] += 1;
        }
    }
    m
}

/// One metrics record per patient present in `data`, ordered by patient id.
pub fn evaluate_by_patient<T: Real>(
    model: &mut Model<T>,
    data: &[Example],
    tag: DatasetTag,
) -> Result<Vec<Metrics>, TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let preds = predict(model, data, EVAL_BATCH)?;
    Ok(crate::windowing::patients(data)
        .iter()
        .map(|id| confusion(data, &preds, tag, Some(id)))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Accuracy of the training-mode predictions made during the epoch.
    pub train_accuracy: f64,
    pub validation_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunHistory {
    pub epochs: Vec<EpochRecord>,
    /// Final-epoch eval-mode metrics on the training and validation sets.
    pub final_metrics: Vec<Metrics>,
    pub wall_seconds: f64,
}

impl RunHistory {
    /// Per-epoch CSV; wall-clock time is deliberately left out.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,train_accuracy,validation_accuracy\n");
        for r in &self.epochs {
            s.push_str(&format!(
                "{},{:.6},{:.2},{:.2}\n",
                r.epoch, r.train_loss, r.train_accuracy, r.validation_accuracy
            ));
        }
        s
    }

    pub fn final_accuracy(&self, tag: DatasetTag) -> Option<f64> {
        self.final_metrics.iter().find(|m| m.tag == tag).map(Metrics::accuracy)
    }
}

/// Fixed-epoch minibatch training with a seeded shuffle every epoch.
pub fn train<T: Real>(
    model: &mut Model<T>,
    train_set: &[Example],
    val_set: &[Example],
    config: &TrainConfig,
) -> Result<RunHistory, TrainError> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let started = Instant::now();
    let size = model.config().input_size;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = AdamState::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for idx in order.chunks(config.batch_size) {
            let batch: Vec<&Example> = idx.iter().map(|&i| &train_set[i]).collect();
            let x = batch_tensor::<T>(&batch, size)?;
            let y = one_hot::<T>(&batch);
            model.zero_grad();
            let logits = model.forward(&x, Mode::Train)?;
            let out = softmax_cross_entropy(&logits, &y)?;
            model.backward(&out.grad)?;
            adam.step(model, &config.adam)?;
            loss_sum += out.loss.to_f64().unwrap_or(f64::NAN) * batch.len() as f64;
            for (row, e) in out.probs.data().chunks(2).zip(&batch) {
                correct += usize::from(predicted_class(row) == e.label.index());
            }
        }
        let validation = evaluate(model, val_set, DatasetTag::Validation)?;
        epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            train_accuracy: 100.0 * correct as f64 / train_set.len() as f64,
            validation_accuracy: validation.accuracy(),
        });
    }
    let final_metrics = vec![
        evaluate(model, train_set, DatasetTag::Train)?,
        evaluate(model, val_set, DatasetTag::Validation)?,
    ];
    Ok(RunHistory {
        epochs,
        final_metrics,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}
