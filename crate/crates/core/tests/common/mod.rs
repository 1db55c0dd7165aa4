#![allow(dead_code)]

pub mod model_oracle;
pub mod oracle;
pub mod scenarios;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stconv_core::frontend::Waveform;
use stconv_core::layers::{
    AvgPool, BatchNorm, Bgru, Block, Dense, FreqCollapseConv, Layer, SeparableTemporalConv, Swsa,
};
use stconv_core::Tensor;

pub const FD_STEP: f64 = 1e-5;
pub const GRAD_TOLERANCE: f64 = 1e-6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(shape: &[usize], scale: f64, rng: &mut impl Rng) -> Tensor {
    Tensor::from_fn(shape, |_| rng.gen_range(-scale..scale))
}

/// ‖a − n‖ / max(‖a‖, ‖n‖), zero when both vanish.
pub fn relative_error(a: &[f64], n: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(n)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(n.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

fn probe_loss<L: Layer + Clone>(layer: &L, x: &Tensor, probe: &Tensor) -> f64 {
    let mut l = layer.clone();
    let y = l.forward_train(x).unwrap();
    y.dot(probe).unwrap()
}

/// Compare analytic gradients of `Σ y ⊙ probe` against central differences.
/// Returns `(name, relative error)` for the input and every parameter.
pub fn grad_check<L: Layer + Clone>(layer: &L, x: &Tensor, seed: u64) -> Vec<(String, f64)> {
    let mut r = rng(seed);
    let mut l = layer.clone();
    let y = l.forward_train(x).unwrap();
    let probe = uniform(y.shape(), 1.0, &mut r);
    let grads = l.backward(&probe).unwrap();

    let mut out = Vec::new();
    let mut numeric = vec![0.0; x.len()];
    for (i, g) in numeric.iter_mut().enumerate() {
        let mut xp = x.clone();
        xp.data_mut()[i] += FD_STEP;
        let mut xm = x.clone();
        xm.data_mut()[i] -= FD_STEP;
        *g = (probe_loss(layer, &xp, &probe) - probe_loss(layer, &xm, &probe)) / (2.0 * FD_STEP);
    }
    out.push((
        "input".to_string(),
        relative_error(grads.input.data(), &numeric),
    ));

    let names: Vec<&str> = layer.params().iter().map(|(n, _)| *n).collect();
    for (p, name) in names.iter().enumerate() {
        let n = layer.params()[p].1.len();
        let mut numeric = vec![0.0; n];
        for (j, g) in numeric.iter_mut().enumerate() {
            let mut plus = layer.clone();
            plus.params_mut()[p].data_mut()[j] += FD_STEP;
            let mut minus = layer.clone();
            minus.params_mut()[p].data_mut()[j] -= FD_STEP;
            *g = (probe_loss(&plus, x, &probe) - probe_loss(&minus, x, &probe)) / (2.0 * FD_STEP);
        }
        out.push((
            name.to_string(),
            relative_error(grads.params[p].data(), &numeric),
        ));
    }
    out
}

/// Worst relative error over a set of checks.
pub fn worst(checks: &[(String, f64)]) -> f64 {
    checks.iter().map(|(_, e)| *e).fold(0.0, f64::max)
}

/// Separable synthetic features: class `k` lifts a band of coefficients
/// around `k * coeffs / classes` over Gaussian-ish noise.
pub fn synthetic_set(
    n: usize,
    frames: usize,
    coeffs: usize,
    classes: usize,
    seed: u64,
) -> stconv_core::dataset::FeatureSet {
    let mut r = rng(seed);
    let mut set = stconv_core::dataset::FeatureSet::new(frames, coeffs);
    let band = (coeffs / classes).max(1);
    for i in 0..n {
        let label = i % classes;
        let x = Tensor::from_fn(&[frames, coeffs], |j| {
            let f = j % coeffs;
            let noise: f64 = (0..3).map(|_| r.gen_range(-0.5..0.5)).sum();
            noise + if f / band == label { 1.5 } else { 0.0 }
        });
        let features = stconv_core::FeatureMatrix::new(x)
            .unwrap()
            .to_f32_precision();
        set.push(format!("syn{i}"), &features, label).unwrap();
    }
    set
}

/// One second of summed sinusoids `(hz, amplitude)` at 16 kHz.
pub fn sine(freqs: &[(f64, f64)]) -> Waveform {
    let samples = (0..16000)
        .map(|n| {
            freqs
                .iter()
                .map(|(f, a)| a * (2.0 * std::f64::consts::PI * f * n as f64 / 16000.0).sin())
                .sum()
        })
        .collect();
    Waveform::new(samples, 16000).unwrap()
}

fn randomize<L: Layer>(layer: &mut L, scale: f64, r: &mut impl Rng) {
    for p in layer.params_mut() {
        p.data_mut()
            .iter_mut()
            .for_each(|v| *v = r.gen_range(-scale..scale));
    }
}

/// Worst relative gradient error per layer type over `instances` random
/// small instances each.
pub fn layer_gradient_suite(instances: u64) -> Vec<(&'static str, f64)> {
    let mut out: Vec<(&'static str, f64)> = Vec::new();
    let mut record = |kind: &'static str, err: f64| match out.iter_mut().find(|(k, _)| *k == kind) {
        Some((_, e)) => *e = e.max(err),
        None => out.push((kind, err)),
    };
    for seed in 0..instances {
        let mut r = rng(1000 + seed);
        let l = FreqCollapseConv::init(5, 3, &mut r);
        record(
            l.kind(),
            worst(&grad_check(&l, &uniform(&[2, 4, 5], 1.0, &mut r), seed)),
        );
        for d in [1, 2, 4] {
            let l = SeparableTemporalConv::init(3, d, &mut r).unwrap();
            record(
                l.kind(),
                worst(&grad_check(&l, &uniform(&[2, 7, 3], 1.0, &mut r), seed)),
            );
        }
        let mut l = BatchNorm::new(3);
        randomize(&mut l, 1.5, &mut r);
        record(
            l.kind(),
            worst(&grad_check(&l, &uniform(&[2, 5, 3], 2.0, &mut r), seed)),
        );
        let mut l = Block::init(3, (1, 2), &mut r).unwrap();
        randomize(&mut l, 1.0, &mut r);
        record(
            l.kind(),
            worst(&grad_check(&l, &uniform(&[2, 6, 3], 1.0, &mut r), seed)),
        );
        let mut l = Bgru::init(3, 2, &mut r);
        randomize(&mut l, 0.8, &mut r);
        record(
            l.kind(),
            worst(&grad_check(&l, &uniform(&[2, 5, 3], 1.0, &mut r), seed)),
        );
        let l = Swsa::new(uniform(&[4, 4], 0.9, &mut r), 2, 2).unwrap();
        record(
            l.kind(),
            worst(&grad_check(&l, &uniform(&[2, 5, 4], 1.0, &mut r), seed)),
        );
        let l = AvgPool::new();
        record(
            l.kind(),
            worst(&grad_check(&l, &uniform(&[2, 5, 3], 1.0, &mut r), seed)),
        );
        let mut l = Dense::init(4, 3, &mut r);
        randomize(&mut l, 1.0, &mut r);
        record(
            l.kind(),
            worst(&grad_check(&l, &uniform(&[2, 4], 1.0, &mut r), seed)),
        );
    }
    out
}
