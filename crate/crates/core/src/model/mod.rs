//! Dense-block convolutional classifier.
//!
//! Layout: a 7×7/2 convolution stem with 3×3/2 max pooling, dense blocks of
//! bottleneck layers (BN → ReLU → 1×1 conv to 4·growth maps → BN → ReLU →
//! 3×3 conv to `growth` maps, each output concatenated onto the block's
//! running feature map), transition layers between blocks (BN → 1×1 conv
//! halving channels → 2×2 pooling), a final BN → ReLU → average pool over
//! the remaining spatial extent, and a `head_units` ReLU dense layer feeding
//! the class logits.

mod checkpoint;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::nn::{
    softmax, AvgPool, BatchNorm, Buffer, Conv2d, ConvGeometry, Dense, MaxPool, Mode, NnError, Param, Real, Relu,
    Tensor, Visit,
};

pub use self::checkpoint::{load, save, CHECKPOINT_VERSION};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("incompatible geometry: {0}")]
    IncompatibleGeometry(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("checkpoint version {found} not supported (expected {expected})")]
    VersionMismatch { found: String, expected: u32 },
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionPool {
    Avg,
    Max,
}

impl FromStr for TransitionPool {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "avg" => Ok(Self::Avg),
            "max" => Ok(Self::Max),
            other => Err(format!("unknown transition pool `{other}`")),
        }
    }
}

impl fmt::Display for TransitionPool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Avg => "avg",
            Self::Max => "max",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub input_size: usize,
    pub growth_rate: usize,
    pub block_layout: Vec<usize>,
    pub head_units: usize,
    pub n_classes: usize,
    pub seed: u64,
    pub transition_pool: TransitionPool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ModelConfig {
    /// 64 px, growth 8, two 2-layer blocks.
    pub fn desk() -> Self {
        Self {
            input_size: 64,
            growth_rate: 8,
            block_layout: vec![2, 2],
            head_units: 512,
            n_classes: 2,
            seed: 0,
            transition_pool: TransitionPool::Avg,
        }
    }

    /// DenseNet-121 backbone layout at 224 px.
    pub fn paper() -> Self {
        Self {
            input_size: 224,
            growth_rate: 32,
            block_layout: vec![6, 12, 24, 16],
            ..Self::desk()
        }
    }

    /// Smallest useful network, for gradient checks.
    pub fn tiny() -> Self {
        Self {
            input_size: 16,
            growth_rate: 2,
            block_layout: vec![1, 1],
            head_units: 8,
            ..Self::desk()
        }
    }

    pub fn stem_channels(&self) -> usize {
        2 * self.growth_rate
    }

    /// Overall spatial reduction: 4 in the stem, 2 per transition.
    pub fn downsampling(&self) -> usize {
        4 << self.block_layout.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::IncompatibleGeometry(m));
        if self.n_classes != 2 {
            return bad(format!("n_classes must be 2, got {}", self.n_classes));
        }
        if self.head_units == 0 || self.growth_rate == 0 {
            return bad("head_units and growth_rate must be >= 1".into());
        }
        if self.block_layout.is_empty() || self.block_layout.contains(&0) {
            return bad("every dense block needs at least one layer".into());
        }
        if self.block_layout.len() > 12 {
            return bad("too many dense blocks".into());
        }
        let factor = self.downsampling();
        if self.input_size == 0 || self.input_size % factor != 0 {
            return bad(format!(
                "input size {} not divisible by downsampling factor {factor}",
                self.input_size
            ));
        }
        Ok(())
    }
}

struct Init {
    rng: ChaCha8Rng,
}

impl Init {
    fn he<T: Real>(&mut self, fan_in: usize, len: usize) -> Vec<T> {
        let std = (2.0 / fan_in as f64).sqrt();
        (0..len)
            .map(|_| {
                let z: f64 = self.rng.sample(StandardNormal);
                T::lit(z * std)
            })
            .collect()
    }

    fn conv<T: Real>(&mut self, g: ConvGeometry) -> Conv2d<T> {
        let w = self.he(g.kh * g.kw * g.cin, g.kernel_len());
        Conv2d::new(g, w)
    }

    fn dense<T: Real>(&mut self, inputs: usize, units: usize) -> Dense<T> {
        let w = self.he(inputs, inputs * units);
        Dense::new(inputs, units, w)
    }
}

#[derive(Debug, Clone)]
struct Stem<T> {
    conv: Conv2d<T>,
    bn: BatchNorm<T>,
    relu: Relu<T>,
    pool: MaxPool,
}

impl<T: Real> Stem<T> {
    fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        let y = self.conv.forward(x, mode)?;
        let y = self.bn.forward(&y, mode)?;
        let y = self.relu.forward(&y, mode);
        self.pool.forward(&y, mode)
    }

    fn backward(&mut self, g: &Tensor<T>) -> Result<(), NnError> {
        let g = self.pool.backward(g)?;
        let g = self.relu.backward(&g)?;
        let g = self.bn.backward(&g)?;
        self.conv.backward(&g, false)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct DenseLayer<T> {
    bn1: BatchNorm<T>,
    relu1: Relu<T>,
    conv1: Conv2d<T>,
    bn2: BatchNorm<T>,
    relu2: Relu<T>,
    conv2: Conv2d<T>,
}

impl<T: Real> DenseLayer<T> {
    fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        let y = self.bn1.forward(x, mode)?;
        let y = self.relu1.forward(&y, mode);
        let y = self.conv1.forward(&y, mode)?;
        let y = self.bn2.forward(&y, mode)?;
        let y = self.relu2.forward(&y, mode);
        self.conv2.forward(&y, mode)
    }

    fn backward(&mut self, g: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let g = self.conv2.backward(g, true)?.expect("input grad requested");
        let g = self.relu2.backward(&g)?;
        let g = self.bn2.backward(&g)?;
        let g = self.conv1.backward(&g, true)?.expect("input grad requested");
        let g = self.relu1.backward(&g)?;
        self.bn1.backward(&g)
    }
}

#[derive(Debug, Clone)]
struct DenseBlock<T> {
    in_channels: usize,
    growth: usize,
    layers: Vec<DenseLayer<T>>,
}

impl<T: Real> DenseBlock<T> {
    fn out_channels(&self) -> usize {
        self.in_channels + self.layers.len() * self.growth
    }

    fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        let mut features = x.clone();
        for layer in &mut self.layers {
            let y = layer.forward(&features, mode)?;
            features = Tensor::concat_channels(&[&features, &y])?;
        }
        Ok(features)
    }

    fn backward(&mut self, g: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let mut acc = g.clone();
        for (l, layer) in self.layers.iter_mut().enumerate().rev() {
            let cin = self.in_channels + l * self.growth;
            let gy = acc.slice_channels(cin, cin + self.growth);
            let gx = layer.backward(&gy)?;
            acc.add_into_channels(0, &gx);
        }
        Ok(acc.slice_channels(0, self.in_channels))
    }
}

#[derive(Debug, Clone)]
enum Downsample {
    Avg(AvgPool),
    Max(MaxPool),
}

#[derive(Debug, Clone)]
struct Transition<T> {
    bn: BatchNorm<T>,
    conv: Conv2d<T>,
    pool: Downsample,
}

impl<T: Real> Transition<T> {
    fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        let y = self.bn.forward(x, mode)?;
        let y = self.conv.forward(&y, mode)?;
        match &mut self.pool {
            Downsample::Avg(p) => p.forward(&y, mode),
            Downsample::Max(p) => p.forward(&y, mode),
        }
    }

    fn backward(&mut self, g: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let g = match &mut self.pool {
            Downsample::Avg(p) => p.backward(g)?,
            Downsample::Max(p) => p.backward(g)?,
        };
        let g = self.conv.backward(&g, true)?.expect("input grad requested");
        self.bn.backward(&g)
    }
}

#[derive(Debug, Clone)]
struct Head<T> {
    bn: BatchNorm<T>,
    relu: Relu<T>,
    pool: AvgPool,
    hidden: Dense<T>,
    hidden_relu: Relu<T>,
    classifier: Dense<T>,
}

impl<T: Real> Head<T> {
    fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        let y = self.bn.forward(x, mode)?;
        let y = self.relu.forward(&y, mode);
        let y = self.pool.forward(&y, mode)?;
        let y = self.hidden.forward(&y, mode)?;
        let y = self.hidden_relu.forward(&y, mode);
        self.classifier.forward(&y, mode)
    }

    fn backward(&mut self, g: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let g = self.classifier.backward(g)?;
        let g = self.hidden_relu.backward(&g)?;
        let g = self.hidden.backward(&g)?;
        let g = self.pool.backward(&g)?;
        let g = self.relu.backward(&g)?;
        self.bn.backward(&g)
    }
}

/// Description of one block of the architecture, for reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSummary {
    pub name: String,
    pub in_channels: usize,
    pub out_channels: usize,
    pub spatial: usize,
}

#[derive(Debug, Clone)]
pub struct Model<T> {
    config: ModelConfig,
    stem: Stem<T>,
    blocks: Vec<DenseBlock<T>>,
    transitions: Vec<Transition<T>>,
    head: Head<T>,
}

impl<T: Real> Model<T> {
    pub fn build(config: &ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut init = Init {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        };
        let g = config.growth_rate;
        let mut channels = config.stem_channels();
        let stem = Stem {
            conv: init.conv(ConvGeometry::square(7, 3, channels, 2, 3)),
            bn: BatchNorm::new(channels),
            relu: Relu::new(),
            pool: MaxPool::new(3, 2, 1),
        };
        let mut spatial = config.input_size / 4;
        let mut blocks = Vec::new();
        let mut transitions = Vec::new();
        for (i, &n_layers) in config.block_layout.iter().enumerate() {
            let layers = (0..n_layers)
                .map(|l| {
                    let cin = channels + l * g;
                    DenseLayer {
                        bn1: BatchNorm::new(cin),
                        relu1: Relu::new(),
                        conv1: init.conv(ConvGeometry::square(1, cin, 4 * g, 1, 0)),
                        bn2: BatchNorm::new(4 * g),
                        relu2: Relu::new(),
                        conv2: init.conv(ConvGeometry::square(3, 4 * g, g, 1, 1)),
                    }
                })
                .collect();
            let block = DenseBlock {
                in_channels: channels,
                growth: g,
                layers,
            };
            channels = block.out_channels();
            blocks.push(block);
            if i + 1 < config.block_layout.len() {
                let out = channels / 2;
                transitions.push(Transition {
                    bn: BatchNorm::new(channels),
                    conv: init.conv(ConvGeometry::square(1, channels, out, 1, 0)),
                    pool: match config.transition_pool {
                        TransitionPool::Avg => Downsample::Avg(AvgPool::new(2)),
                        TransitionPool::Max => Downsample::Max(MaxPool::new(2, 2, 0)),
                    },
                });
                channels = out;
                spatial /= 2;
            }
        }
        let head = Head {
            bn: BatchNorm::new(channels),
            relu: Relu::new(),
            pool: AvgPool::new(spatial),
            hidden: init.dense(channels, config.head_units),
            hidden_relu: Relu::new(),
            classifier: init.dense(config.head_units, config.n_classes),
        };
        Ok(Self {
            config: config.clone(),
            stem,
            blocks,
            transitions,
            head,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Class logits, `batch × n_classes`.
    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, ModelError> {
        let s = self.config.input_size;
        if x.shape()[1..] != [s, s, 3] {
            return Err(NnError::ShapeMismatch(format!(
                "model expects {s}x{s}x3 inputs, got {:?}",
                x.shape()
            ))
            .into());
        }
        let mut y = self.stem.forward(x, mode)?;
        for i in 0..self.blocks.len() {
            y = self.blocks[i].forward(&y, mode)?;
            if let Some(t) = self.transitions.get_mut(i) {
                y = t.forward(&y, mode)?;
            }
        }
        Ok(self.head.forward(&y, mode)?)
    }

    /// Class probabilities; rows sum to 1.
    pub fn predict_proba(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, ModelError> {
        Ok(softmax(&self.forward(x, mode)?))
    }

    /// Backpropagates `d loss / d logits` from the last training forward pass,
    /// accumulating into every parameter gradient.
    pub fn backward(&mut self, grad_logits: &Tensor<T>) -> Result<(), ModelError> {
        let mut g = self.head.backward(grad_logits)?;
        for i in (0..self.blocks.len()).rev() {
            if let Some(t) = self.transitions.get_mut(i) {
                g = t.backward(&g)?;
            }
            g = self.blocks[i].backward(&g)?;
        }
        self.stem.backward(&g)?;
        Ok(())
    }

    pub fn zero_grad(&mut self) {
        self.visit_params("", &mut |_, p| p.zero_grad());
    }

    /// Trainable parameter count, including the classification head.
    pub fn parameter_count(&mut self) -> usize {
        let mut n = 0;
        self.visit_params("", &mut |_, p| n += p.len());
        n
    }

    /// Trainable parameters excluding the two dense head layers.
    pub fn backbone_parameter_count(&mut self) -> usize {
        let mut n = 0;
        self.visit_params("", &mut |name, p| {
            if !name.starts_with("head.hidden") && !name.starts_with("head.classifier") {
                n += p.len();
            }
        });
        n
    }

    /// Input channel count of every dense-block layer, block by block.
    pub fn dense_layer_inputs(&self) -> Vec<Vec<usize>> {
        self.blocks
            .iter()
            .map(|b| b.layers.iter().map(|l| l.conv1.geometry.cin).collect())
            .collect()
    }

    pub fn stages(&self) -> Vec<StageSummary> {
        let mut out = Vec::new();
        let mut spatial = self.config.input_size / 4;
        out.push(StageSummary {
            name: "stem".into(),
            in_channels: 3,
            out_channels: self.stem.conv.geometry.cout,
            spatial,
        });
        for (i, b) in self.blocks.iter().enumerate() {
            out.push(StageSummary {
                name: format!("block{}", i + 1),
                in_channels: b.in_channels,
                out_channels: b.out_channels(),
                spatial,
            });
            if let Some(t) = self.transitions.get(i) {
                spatial /= 2;
                out.push(StageSummary {
                    name: format!("transition{}", i + 1),
                    in_channels: t.conv.geometry.cin,
                    out_channels: t.conv.geometry.cout,
                    spatial,
                });
            }
        }
        out.push(StageSummary {
            name: "head".into(),
            in_channels: self.head.hidden.inputs(),
            out_channels: self.head.classifier.units(),
            spatial: self.head.pool.k,
        });
        out
    }

    /// Side of the final average-pooling window.
    pub fn final_pool_size(&self) -> usize {
        self.head.pool.k
    }

    pub fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<T>)) {
        self.visit_all(prefix, f, &mut |_, _| {});
    }

    pub fn visit_buffers(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Buffer<T>)) {
        self.visit_all(prefix, &mut |_, _| {}, f);
    }

    /// Parameters and buffers interleaved in one fixed, layer-ordered walk.
    pub fn visit_all(
        &mut self,
        prefix: &str,
        fp: &mut dyn FnMut(&str, &mut Param<T>),
        fb: &mut dyn FnMut(&str, &mut Buffer<T>),
    ) {
        let p = |s: &str| {
            if prefix.is_empty() {
                s.to_string()
            } else {
                format!("{prefix}.{s}")
            }
        };
        fn bn<T: Real>(
            b: &mut BatchNorm<T>,
            name: &str,
            fp: &mut dyn FnMut(&str, &mut Param<T>),
            fb: &mut dyn FnMut(&str, &mut Buffer<T>),
        ) {
            b.visit_params(name, fp);
            b.visit_buffers(name, fb);
        }
        self.stem.conv.visit_params(&p("stem.conv"), fp);
        bn(&mut self.stem.bn, &p("stem.bn"), fp, fb);
        for (i, block) in self.blocks.iter_mut().enumerate() {
            for (l, layer) in block.layers.iter_mut().enumerate() {
                let base = p(&format!("block{}.layer{}", i + 1, l + 1));
                bn(&mut layer.bn1, &format!("{base}.bn1"), fp, fb);
                layer.conv1.visit_params(&format!("{base}.conv1"), fp);
                bn(&mut layer.bn2, &format!("{base}.bn2"), fp, fb);
                layer.conv2.visit_params(&format!("{base}.conv2"), fp);
            }
            if let Some(t) = self.transitions.get_mut(i) {
                let base = p(&format!("transition{}", i + 1));
                bn(&mut t.bn, &format!("{base}.bn"), fp, fb);
                t.conv.visit_params(&format!("{base}.conv"), fp);
            }
        }
        bn(&mut self.head.bn, &p("head.bn"), fp, fb);
        self.head.hidden.visit_params(&p("head.hidden"), fp);
        self.head.classifier.visit_params(&p("head.classifier"), fp);
    }
}
