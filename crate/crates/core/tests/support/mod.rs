//! Independent oracles and gradient checks shared by the integration tests
//! and the acceptance suite. Each routine returns the worst error it saw.

#![allow(dead_code)]

use std::collections::HashMap;

use cgm_hypo::cgm::{GlucoseSample, GlucoseSeries};
use cgm_hypo::config::PipelineConfig;
use cgm_hypo::model::{Model, ModelConfig};
use cgm_hypo::nn::{
    conv2d, dense, softmax_cross_entropy, AvgPool, BatchNorm, Conv2d, ConvGeometry, Dense, MaxPool, Mode,
    Relu, Tensor,
};
use cgm_hypo::pipeline;
use cgm_hypo::synthetic::series_start;
use cgm_hypo::training::{train, Example, RunHistory, TrainConfig};
use cgm_hypo::transforms::{cwt, gaf, geometric_scales, morlet, TransformConfig};
use cgm_hypo::windowing::{segment, Label, Thresholds, WindowSpec};
use chrono::{DateTime, Duration, Utc};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const FD_STEP: f64 = 1e-5;

/// `‖a − b‖ / (‖a‖ + ‖b‖)`, zero when both vanish.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na + nb == 0.0 {
        0.0
    } else {
        diff / (na + nb)
    }
}

/// Central differences of `f` at `x`.
pub fn numeric_grad(x: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut v = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = v[i];
            v[i] = orig + FD_STEP;
            let plus = f(&v);
            v[i] = orig - FD_STEP;
            let minus = f(&v);
            v[i] = orig;
            (plus - minus) / (2.0 * FD_STEP)
        })
        .collect()
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn tensor(shape: [usize; 4], data: &[f64]) -> Tensor<f64> {
    Tensor::from_vec(shape, data.to_vec()).unwrap()
}

fn dot(a: &Tensor<f64>, r: &[f64]) -> f64 {
    a.data().iter().zip(r).map(|(x, y)| x * y).sum()
}

/// Values kept away from zero so that ReLU and max-pool kinks are not
/// straddled by the finite-difference step.
fn away_from_kinks(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let v: f64 = rng.sample(StandardNormal);
            if v.abs() < 1e-2 {
                0.5_f64.copysign(v)
            } else {
                v
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct GradReport {
    pub layer: &'static str,
    pub trials: usize,
    pub max_rel_err: f64,
}

fn report(layer: &'static str, errs: Vec<f64>) -> GradReport {
    GradReport {
        layer,
        trials: errs.len(),
        max_rel_err: errs.into_iter().fold(0.0, f64::max),
    }
}

const CONV_GEOMETRIES: [(usize, usize, usize); 5] = [(3, 1, 1), (1, 1, 0), (7, 2, 3), (3, 2, 0), (2, 2, 0)];

pub fn check_conv(trials: usize, seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errs = Vec::new();
    for t in 0..trials {
        let (k, stride, pad) = CONV_GEOMETRIES[t % CONV_GEOMETRIES.len()];
        let (cin, cout) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let g = ConvGeometry::square(k, cin, cout, stride, pad);
        let hw = rng.random_range(k.max(3)..=k.max(3) + 4);
        let shape = [2, hw, hw, cin];
        let x = normals(&mut rng, shape.iter().product());
        let w = normals(&mut rng, g.kernel_len());
        let mut layer = Conv2d::new(g, w.clone());
        let y = layer.forward(&tensor(shape, &x), Mode::Train).unwrap();
        let r = normals(&mut rng, y.len());
        let dx = layer.backward(&tensor(y.shape(), &r), true).unwrap().unwrap();
        let nx = numeric_grad(&x, |xv| dot(&conv2d(&tensor(shape, xv), &w, &g).unwrap().0, &r));
        let nw = numeric_grad(&w, |wv| dot(&conv2d(&tensor(shape, &x), wv, &g).unwrap().0, &r));
        errs.push(rel_err(dx.data(), &nx).max(rel_err(&layer.weight.grad, &nw)));
    }
    report("conv2d", errs)
}

pub fn check_batchnorm(trials: usize, seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errs = Vec::new();
    for _ in 0..trials {
        let c = rng.random_range(1..=3);
        let shape = [rng.random_range(2..=4), 2, rng.random_range(1..=3), c];
        let x = normals(&mut rng, shape.iter().product());
        let gamma = normals(&mut rng, c);
        let beta = normals(&mut rng, c);
        let build = |gm: &[f64], bt: &[f64]| {
            let mut bn = BatchNorm::<f64>::new(c);
            bn.gamma.value.copy_from_slice(gm);
            bn.beta.value.copy_from_slice(bt);
            bn
        };
        let mut bn = build(&gamma, &beta);
        let y = bn.forward(&tensor(shape, &x), Mode::Train).unwrap();
        let r = normals(&mut rng, y.len());
        let dx = bn.backward(&tensor(shape, &r)).unwrap();
        let loss = |xv: &[f64], gm: &[f64], bt: &[f64]| {
            dot(&build(gm, bt).forward(&tensor(shape, xv), Mode::Train).unwrap(), &r)
        };
        let nx = numeric_grad(&x, |v| loss(v, &gamma, &beta));
        let ng = numeric_grad(&gamma, |v| loss(&x, v, &beta));
        let nb = numeric_grad(&beta, |v| loss(&x, &gamma, v));
        errs.push(
            rel_err(dx.data(), &nx)
                .max(rel_err(&bn.gamma.grad, &ng))
                .max(rel_err(&bn.beta.grad, &nb)),
        );
    }
    report("batchnorm", errs)
}

pub fn check_relu(trials: usize, seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errs = Vec::new();
    for _ in 0..trials {
        let shape = [2, 3, 3, 2];
        let x = away_from_kinks(&mut rng, 36);
        let mut layer = Relu::new();
        let y = layer.forward(&tensor(shape, &x), Mode::Train);
        let r = normals(&mut rng, y.len());
        let dx = layer.backward(&tensor(shape, &r)).unwrap();
        let nx = numeric_grad(&x, |v| dot(&Relu::new().forward(&tensor(shape, v), Mode::Eval), &r));
        errs.push(rel_err(dx.data(), &nx));
    }
    report("relu", errs)
}

pub fn check_maxpool(trials: usize, seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errs = Vec::new();
    for t in 0..trials {
        let (k, stride, pad) = if t % 2 == 0 { (3, 2, 1) } else { (2, 2, 0) };
        let shape = [2, 4, 4, 2];
        let x = normals(&mut rng, 64);
        let mut layer = MaxPool::new(k, stride, pad);
        let y = layer.forward(&tensor(shape, &x), Mode::Train).unwrap();
        let r = normals(&mut rng, y.len());
        let dx = layer.backward(&tensor(y.shape(), &r)).unwrap();
        let nx = numeric_grad(&x, |v| {
            dot(&MaxPool::new(k, stride, pad).forward(&tensor(shape, v), Mode::Eval).unwrap(), &r)
        });
        errs.push(rel_err(dx.data(), &nx));
    }
    report("maxpool", errs)
}

pub fn check_avgpool(trials: usize, seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errs = Vec::new();
    for t in 0..trials {
        let k = 1 + t % 3;
        let shape = [2, 2 * k, 3 * k, 2];
        let x = normals(&mut rng, shape.iter().product());
        let mut layer = AvgPool::new(k);
        let y = layer.forward(&tensor(shape, &x), Mode::Train).unwrap();
        let r = normals(&mut rng, y.len());
        let dx = layer.backward(&tensor(y.shape(), &r)).unwrap();
        let nx = numeric_grad(&x, |v| dot(&AvgPool::new(k).forward(&tensor(shape, v), Mode::Eval).unwrap(), &r));
        errs.push(rel_err(dx.data(), &nx));
    }
    report("avgpool", errs)
}

pub fn check_dense(trials: usize, seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errs = Vec::new();
    for _ in 0..trials {
        let (b, d, u) = (rng.random_range(1..=4), rng.random_range(1..=6), rng.random_range(1..=5));
        let shape = [b, 1, 1, d];
        let x = normals(&mut rng, b * d);
        let w = normals(&mut rng, d * u);
        let bias = normals(&mut rng, u);
        let mut layer = Dense::new(d, u, w.clone());
        layer.bias.value.copy_from_slice(&bias);
        let y = layer.forward(&tensor(shape, &x), Mode::Train).unwrap();
        let r = normals(&mut rng, y.len());
        let dx = layer.backward(&tensor(y.shape(), &r)).unwrap();
        let nx = numeric_grad(&x, |v| dot(&dense(&tensor(shape, v), &w, &bias).unwrap(), &r));
        let nw = numeric_grad(&w, |v| dot(&dense(&tensor(shape, &x), v, &bias).unwrap(), &r));
        let nb = numeric_grad(&bias, |v| dot(&dense(&tensor(shape, &x), &w, v).unwrap(), &r));
        errs.push(
            rel_err(dx.data(), &nx)
                .max(rel_err(&layer.weight.grad, &nw))
                .max(rel_err(&layer.bias.grad, &nb)),
        );
    }
    report("dense", errs)
}

pub fn check_softmax_ce(trials: usize, seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errs = Vec::new();
    for _ in 0..trials {
        let (b, k) = (rng.random_range(1..=5), rng.random_range(2..=4));
        let z: Vec<f64> = normals(&mut rng, b * k).iter().map(|v| 3.0 * v).collect();
        let mut y = vec![0.0; b * k];
        for row in 0..b {
            y[row * k + rng.random_range(0..k)] = 1.0;
        }
        let out = softmax_cross_entropy(&Tensor::matrix(b, k, z.clone()).unwrap(), &y).unwrap();
        let nz = numeric_grad(&z, |v| {
            softmax_cross_entropy(&Tensor::matrix(b, k, v.to_vec()).unwrap(), &y)
                .unwrap()
                .loss
        });
        errs.push(rel_err(out.grad.data(), &nz));
    }
    report("softmax_cross_entropy", errs)
}

pub fn layer_gradient_reports(trials: usize, seed: u64) -> Vec<GradReport> {
    vec![
        check_conv(trials, seed),
        check_batchnorm(trials, seed + 1),
        check_relu(trials, seed + 2),
        check_maxpool(trials, seed + 3),
        check_avgpool(trials, seed + 4),
        check_dense(trials, seed + 5),
        check_softmax_ce(trials, seed + 6),
    ]
}

fn param_values(model: &mut Model<f64>) -> Vec<f64> {
    let mut v = Vec::new();
    model.visit_params("", &mut |_, p| v.extend_from_slice(&p.value));
    v
}

fn param_grads(model: &mut Model<f64>) -> Vec<f64> {
    let mut v = Vec::new();
    model.visit_params("", &mut |_, p| v.extend_from_slice(&p.grad));
    v
}

fn set_params(model: &mut Model<f64>, values: &[f64]) {
    let mut at = 0;
    model.visit_params("", &mut |_, p| {
        let len = p.len();
        p.value.copy_from_slice(&values[at..at + len]);
        at += len;
    });
}

/// Whole-network gradient of the mean cross-entropy on the tiny config,
/// with respect to every parameter.
pub fn check_model(trials: usize, seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errs = Vec::new();
    for t in 0..trials {
        let config = ModelConfig {
            seed: seed + t as u64,
            ..ModelConfig::tiny()
        };
        let mut model = Model::<f64>::build(&config).unwrap();
        let b = 3;
        let s = config.input_size;
        let x = tensor([b, s, s, 3], &normals(&mut rng, b * s * s * 3));
        let mut y = vec![0.0; b * 2];
        for row in 0..b {
            y[row * 2 + rng.random_range(0..2)] = 1.0;
        }
        model.zero_grad();
        let logits = model.forward(&x, Mode::Train).unwrap();
        let out = softmax_cross_entropy(&logits, &y).unwrap();
        model.backward(&out.grad).unwrap();
        let analytic = param_grads(&mut model);
        let theta = param_values(&mut model);
        let numeric = numeric_grad(&theta, |v| {
            set_params(&mut model, v);
            let logits = model.forward(&x, Mode::Train).unwrap();
            softmax_cross_entropy(&logits, &y).unwrap().loss
        });
        errs.push(rel_err(&analytic, &numeric));
    }
    report("model(tiny)", errs)
}

/// Quadruple-loop cross-correlation with zero padding.
pub fn naive_conv(x: &Tensor<f64>, kernel: &[f64], g: &ConvGeometry) -> Vec<f64> {
    let [b, h, w, cin] = x.shape();
    let oh = (h + 2 * g.pad - g.kh) / g.stride + 1;
    let ow = (w + 2 * g.pad - g.kw) / g.stride + 1;
    let mut out = vec![0.0; b * oh * ow * g.cout];
    for n in 0..b {
        for oy in 0..oh {
            for ox in 0..ow {
                for co in 0..g.cout {
                    let mut acc = 0.0;
                    for ky in 0..g.kh {
                        for kx in 0..g.kw {
                            let iy = (oy * g.stride + ky) as isize - g.pad as isize;
                            let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                            if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                continue;
                            }
                            for ci in 0..cin {
                                let xv = x.data()[((n * h + iy as usize) * w + ix as usize) * cin + ci];
                                let kv = kernel[((ky * g.kw + kx) * cin + ci) * g.cout + co];
                                acc += xv * kv;
                            }
                        }
                    }
                    out[((n * oh + oy) * ow + ox) * g.cout + co] = acc;
                }
            }
        }
    }
    out
}

/// Max relative deviation (scaled by the oracle's largest magnitude) of the
/// im2col convolution from the loop oracle.
pub fn conv_oracle_error(trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let (k, stride, pad) = CONV_GEOMETRIES[t % CONV_GEOMETRIES.len()];
        let g = ConvGeometry::square(k, rng.random_range(1..=8), rng.random_range(1..=8), stride, pad);
        let hw = rng.random_range(k.max(4)..=k.max(4) + 12);
        let shape = [rng.random_range(1..=3), hw, hw + 1, g.cin];
        let x = tensor(shape, &normals(&mut rng, shape.iter().product()));
        let w = normals(&mut rng, g.kernel_len());
        let fast = conv2d(&x, &w, &g).unwrap().0;
        let slow = naive_conv(&x, &w, &g);
        let scale = slow.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for (a, b) in fast.data().iter().zip(&slow) {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    worst
}

pub fn dense_oracle_error(trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let (b, d, u) = (rng.random_range(1..=8), rng.random_range(1..=40), rng.random_range(1..=20));
        let x = normals(&mut rng, b * d);
        let w = normals(&mut rng, d * u);
        let bias = normals(&mut rng, u);
        let y = dense(&Tensor::matrix(b, d, x.clone()).unwrap(), &w, &bias).unwrap();
        for n in 0..b {
            for j in 0..u {
                let mut acc = bias[j];
                for i in 0..d {
                    acc += x[n * d + i] * w[i * u + j];
                }
                worst = worst.max((y.data()[n * u + j] - acc).abs() / acc.abs().max(1.0));
            }
        }
    }
    worst
}

/// `W(a, b) = a^(-1/2) Σ_t x(t) conj(ψ((t − b)/a))` with the lag taken on
/// the circle, summed term by term.
pub fn direct_cwt_row(signal: &[f64], a: f64, omega0: f64) -> Vec<Complex64> {
    let n = signal.len() as i64;
    (0..n)
        .map(|b| {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..n {
                for wrap in -6..=6 {
                    let u = (t - b + wrap * n) as f64 / a;
                    if u.abs() > 38.0 {
                        continue;
                    }
                    acc += signal[t as usize] * morlet(u, omega0).conj();
                }
            }
            acc / a.sqrt()
        })
        .collect()
}

pub fn cwt_oracle_error(trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = rng.random_range(8..=256usize);
        let signal: Vec<f64> = (0..n).map(|_| 100.0 + 30.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let ladder = geometric_scales(2.0, n as f64 / 2.0, 64);
        let scales: Vec<f64> = (0..3).map(|_| ladder[rng.random_range(0..ladder.len())]).collect();
        let fast = cwt(&signal, &scales, 6.0).unwrap();
        for (row, &a) in scales.iter().enumerate() {
            let slow = direct_cwt_row(&signal, a, 6.0);
            let scale = slow.iter().map(|c| c.norm()).fold(0.0, f64::max);
            for (f, s) in fast.row(row).iter().zip(&slow) {
                worst = worst.max((f - s).norm() / scale);
            }
        }
    }
    worst
}

/// GAF from its definition `cos(arccos x_i + arccos x_j)`.
pub fn gaf_oracle_error(trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = TransformConfig::default();
    let (lo, hi) = config.glucose_range;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = rng.random_range(1..=96);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
        let g = gaf(&values, &config).unwrap();
        let phi: Vec<f64> = values
            .iter()
            .map(|v| (2.0 * (v - lo) / (hi - lo) - 1.0).acos())
            .collect();
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((g.get(i, j) - (phi[i] + phi[j]).cos()).abs());
            }
        }
    }
    worst
}

/// A gapless `hours`-long 15-minute series with values in [40, 200].
pub fn gapless_series(hours: usize, seed: u64) -> GlucoseSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = series_start();
    let samples = (0..hours * 4)
        .map(|i| GlucoseSample {
            timestamp: start + Duration::minutes(15 * i as i64),
            value: rng.random_range(40.0..200.0),
        })
        .collect();
    GlucoseSeries::new("p", samples, 15).unwrap()
}

/// Every 1 h-spaced start whose 48 consecutive hours of 15-minute readings
/// are all present, labelled by scanning the second day.
pub fn brute_force_windows(series: &GlucoseSeries, hypo: f64) -> Vec<(DateTime<Utc>, Vec<f64>, Label)> {
    let by_time: HashMap<DateTime<Utc>, f64> = series.samples().iter().map(|s| (s.timestamp, s.value)).collect();
    let first = series.samples()[0].timestamp;
    let last = series.samples()[series.len() - 1].timestamp;
    let mut out = Vec::new();
    let mut start = first;
    while start + Duration::minutes(15 * 191) <= last {
        let values: Option<Vec<f64>> = (0..192)
            .map(|i| by_time.get(&(start + Duration::minutes(15 * i))).copied())
            .collect();
        if let Some(v) = values {
            let hypo_ahead = v[96..].iter().any(|&g| g < hypo);
            let label = if hypo_ahead { Label::Hypoglycemia } else { Label::Normal };
            out.push((start, v[..96].to_vec(), label));
        }
        start += Duration::hours(1);
    }
    out
}

/// Runs `patterns` random gap layouts over a 14-day series and counts the
/// layouts where `segment` and the brute-force enumerator disagree.
pub fn window_pattern_mismatches(patterns: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for p in 0..patterns {
        let full = gapless_series(14 * 24, seed + p as u64);
        let mut keep = vec![true; full.len()];
        for _ in 0..rng.random_range(0..=6) {
            let at = rng.random_range(1..full.len() - 1);
            let len = rng.random_range(1..=40);
            for k in keep.iter_mut().skip(at).take(len) {
                *k = false;
            }
        }
        keep[0] = true;
        let samples: Vec<GlucoseSample> = full
            .samples()
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(s, _)| s.clone())
            .collect();
        let series = GlucoseSeries::new("p", samples, 15).unwrap();
        let expected = brute_force_windows(&series, 70.0);
        let got = match segment(&series, &WindowSpec::default(), &Thresholds::default()) {
            Ok(w) => w,
            Err(_) => Vec::new(),
        };
        let same = got.len() == expected.len()
            && got
                .iter()
                .zip(&expected)
                .all(|(w, (t, v, l))| w.start_time == *t && &w.input == v && w.label == *l);
        if !same {
            mismatches += 1;
        }
    }
    mismatches
}

/// Four windows of each class from the default synthetic cohort, a day
/// apart, rendered at the desk input size.
pub fn memorization_examples() -> Vec<Example> {
    let cfg = PipelineConfig::default();
    let series: Vec<GlucoseSeries> = pipeline::synthesize(&cfg)
        .unwrap()
        .iter()
        .map(|s| pipeline::ingest(s, &cfg).unwrap().series)
        .collect();
    let windows = pipeline::window_cohort(&series, &cfg).unwrap();
    let mut picked = Vec::new();
    for label in [Label::Normal, Label::Hypoglycemia] {
        picked.extend(windows.iter().filter(|w| w.label == label).step_by(24).take(4).cloned());
    }
    pipeline::render_examples(&picked, &cfg).unwrap()
}

/// Trains the desk model on the memorization set with the default protocol.
pub fn memorization_run(epochs: usize) -> RunHistory {
    let data = memorization_examples();
    let mut model = Model::<f32>::build(&ModelConfig::desk()).unwrap();
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    train(&mut model, &data, &data, &cfg).unwrap()
}

/// Backbone parameters counted layer by layer from the architecture
/// description: stem conv + BN, bottleneck layers, transitions, final BN.
pub fn analytic_backbone(growth: usize, layout: &[usize]) -> usize {
    let mut c = 2 * growth;
    let mut total = 7 * 7 * 3 * c + 2 * c;
    for (i, &layers) in layout.iter().enumerate() {
        for l in 0..layers {
            let cin = c + l * growth;
            total += 2 * cin + cin * 4 * growth + 2 * 4 * growth + 3 * 3 * 4 * growth * growth;
        }
        c += layers * growth;
        if i + 1 < layout.len() {
            total += 2 * c + c * (c / 2);
            c /= 2;
        }
    }
    total + 2 * c
}
