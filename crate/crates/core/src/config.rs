//! Whole-pipeline configuration in a sectioned `key = value` text file
//! (TOML). Every key is optional and falls back to its default; unknown keys
//! are errors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelConfig, TransitionPool};
use crate::training::{AdamConfig, TrainConfig};
use crate::transforms::{Colormap, TransformConfig, TransformKind};
use crate::windowing::{SplitSpec, SplitStrategy, Thresholds, WindowSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config value: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSection {
    pub patients: usize,
    pub days: usize,
    pub dropouts_min: usize,
    pub dropouts_max: usize,
    pub dropout_hours_min: u32,
    pub dropout_hours_max: u32,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        Self {
            patients: 4,
            days: 14,
            dropouts_min: 1,
            dropouts_max: 2,
            dropout_hours_min: 2,
            dropout_hours_max: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub interval_min: u32,
    pub max_fill_min: f64,
}

impl Default for IngestSection {
    fn default() -> Self {
        Self {
            interval_min: crate::cgm::DEFAULT_INTERVAL_MIN,
            max_fill_min: crate::cgm::DEFAULT_MAX_FILL_MIN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSection {
    pub window_h: u32,
    pub step_h: u32,
    pub lookahead_h: u32,
    pub hypo_mg_dl: f64,
    pub hyper_mg_dl: f64,
}

impl Default for WindowSection {
    fn default() -> Self {
        let (s, t) = (WindowSpec::default(), Thresholds::default());
        Self {
            window_h: s.window_h,
            step_h: s.step_h,
            lookahead_h: s.lookahead_h,
            hypo_mg_dl: t.hypo,
            hyper_mg_dl: t.hyper,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformSection {
    pub kind: String,
    pub n_scales: usize,
    pub morlet_omega0: f64,
    pub colormap: String,
    pub glucose_min: f64,
    pub glucose_max: f64,
}

impl Default for TransformSection {
    fn default() -> Self {
        let t = TransformConfig::default();
        Self {
            kind: t.kind.to_string(),
            n_scales: t.n_scales,
            morlet_omega0: t.morlet_omega0,
            colormap: t.colormap.to_string(),
            glucose_min: t.glucose_range.0,
            glucose_max: t.glucose_range.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub input_size: usize,
    pub growth_rate: usize,
    pub block_layout: Vec<usize>,
    pub head_units: usize,
    pub n_classes: usize,
    pub transition_pool: String,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::desk();
        Self {
            input_size: m.input_size,
            growth_rate: m.growth_rate,
            block_layout: m.block_layout,
            head_units: m.head_units,
            n_classes: m.n_classes,
            transition_pool: m.transition_pool.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub strategy: String,
    /// Draw a new partition for every repetition instead of one shared split.
    pub reshuffle_per_repeat: bool,
}

impl Default for SplitSection {
    fn default() -> Self {
        let s = SplitSpec::default();
        Self {
            train: s.train,
            validation: s.validation,
            test: s.test,
            strategy: s.strategy.to_string(),
            reshuffle_per_repeat: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            learning_rate: t.adam.learning_rate,
            batch_size: t.batch_size,
            beta1: t.adam.beta1,
            beta2: t.adam.beta2,
            epsilon: t.adam.epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub seed: u64,
    pub repeats: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self { seed: 1, repeats: 10 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub synthetic: SyntheticSection,
    pub ingest: IngestSection,
    pub window: WindowSection,
    pub transform: TransformSection,
    pub model: ModelSection,
    pub split: SplitSection,
    pub train: TrainSection,
    pub experiment: ExperimentSection,
}

fn parse_field<T: std::str::FromStr<Err = String>>(v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(ConfigError::Invalid)
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    /// Checks every section by building the typed configs it maps to.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: String| ConfigError::Invalid(e);
        let s = &self.synthetic;
        if s.patients == 0 || s.days == 0 {
            return Err(invalid("synthetic.patients and synthetic.days must be >= 1".into()));
        }
        if s.dropouts_min > s.dropouts_max || s.dropout_hours_min > s.dropout_hours_max {
            return Err(invalid("synthetic dropout ranges must be ordered".into()));
        }
        if self.ingest.interval_min == 0 || !(self.ingest.max_fill_min >= 0.0) {
            return Err(invalid("ingest.interval_min must be >= 1 and max_fill_min >= 0".into()));
        }
        let t = self.transform_config()?;
        t.validate().map_err(|e| invalid(e.to_string()))?;
        self.model_config(0)?.validate().map_err(|e| invalid(e.to_string()))?;
        self.split_spec(0)?.validate().map_err(|e| invalid(e.to_string()))?;
        self.train_config(0).validate().map_err(|e| invalid(e.to_string()))?;
        if self.experiment.repeats == 0 {
            return Err(invalid("experiment.repeats must be >= 1".into()));
        }
        Ok(())
    }

    pub fn window_spec(&self) -> WindowSpec {
        WindowSpec {
            window_h: self.window.window_h,
            step_h: self.window.step_h,
            lookahead_h: self.window.lookahead_h,
        }
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            hypo: self.window.hypo_mg_dl,
            hyper: self.window.hyper_mg_dl,
        }
    }

    /// Images are rendered at the model's input size.
    pub fn transform_config(&self) -> Result<TransformConfig, ConfigError> {
        let t = &self.transform;
        Ok(TransformConfig {
            kind: parse_field::<TransformKind>(&t.kind)?,
            n_scales: t.n_scales,
            morlet_omega0: t.morlet_omega0,
            colormap: parse_field::<Colormap>(&t.colormap)?,
            glucose_range: (t.glucose_min, t.glucose_max),
            image_size: self.model.input_size,
        })
    }

    pub fn model_config(&self, seed: u64) -> Result<ModelConfig, ConfigError> {
        let m = &self.model;
        Ok(ModelConfig {
            input_size: m.input_size,
            growth_rate: m.growth_rate,
            block_layout: m.block_layout.clone(),
            head_units: m.head_units,
            n_classes: m.n_classes,
            seed,
            transition_pool: parse_field::<TransitionPool>(&m.transition_pool)?,
        })
    }

    pub fn split_spec(&self, seed: u64) -> Result<SplitSpec, ConfigError> {
        let s = &self.split;
        Ok(SplitSpec {
            train: s.train,
            validation: s.validation,
            test: s.test,
            seed,
            strategy: parse_field::<SplitStrategy>(&s.strategy)?,
        })
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            adam: AdamConfig {
                learning_rate: t.learning_rate,
                beta1: t.beta1,
                beta2: t.beta2,
                epsilon: t.epsilon,
            },
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = PipelineConfig::default();
        let text = cfg.to_text();
        assert_eq!(PipelineConfig::parse(&text).unwrap(), cfg);
        assert_eq!(PipelineConfig::parse("").unwrap(), cfg);
    }

    #[test]
    fn edited_values_round_trip() {
        let text = "[train]\nepochs = 3\nlearning_rate = 0.0005\n\n[model]\nblock_layout = [1, 2, 1]\ninput_size = 32\n\n[experiment]\nseed = 42\n";
        let cfg = PipelineConfig::parse(text).unwrap();
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.model.block_layout, vec![1, 2, 1]);
        assert_eq!(PipelineConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            PipelineConfig::parse("[train]\nepoch = 3\n"),
            Err(ConfigError::Parse(_))
        ));
        assert!(PipelineConfig::parse("[nonsense]\nx = 1\n").is_err());
    }

    #[test]
    fn bad_values_rejected() {
        assert!(matches!(
            PipelineConfig::parse("[transform]\ncolormap = \"jet\"\n"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(PipelineConfig::parse("[model]\ninput_size = 60\n").is_err());
        assert!(PipelineConfig::parse("[split]\ntrain = 0.9\n").is_err());
        assert!(PipelineConfig::parse("[train]\nepochs = 0\n").is_err());
    }

    #[test]
    fn defaults_follow_the_paper() {
        let cfg = PipelineConfig::default();
        let t = cfg.train_config(0);
        assert_eq!((t.epochs, t.batch_size, t.adam.learning_rate), (50, 64, 0.001));
        assert_eq!((cfg.split.train, cfg.split.validation, cfg.split.test), (0.75, 0.15, 0.10));
        assert_eq!(cfg.experiment.repeats, 10);
    }
}
