//! Reference model built from the loop oracles, plus helpers to move
//! between tensors and nested vectors.

use rand::Rng;
use stconv_core::layers::{BatchNorm, Block, GruDirection, Layer, SeparableTemporalConv};
use stconv_core::model::Pooling;
use stconv_core::{ModelConfig, StConvModel, Tensor};

use super::oracle::{self, BnParams, GruWeights};
use super::rng;

pub fn seqs(x: &Tensor) -> Vec<Vec<Vec<f64>>> {
    let (b, t, c) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    (0..b)
        .map(|bi| {
            (0..t)
                .map(|ti| x.data()[(bi * t + ti) * c..(bi * t + ti + 1) * c].to_vec())
                .collect()
        })
        .collect()
}

pub fn matrix(t: &Tensor, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    t.data()
        .chunks(cols)
        .take(rows)
        .map(<[f64]>::to_vec)
        .collect()
}

pub fn flat(v: &[Vec<Vec<f64>>]) -> Vec<f64> {
    v.iter().flatten().flatten().copied().collect()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn gru_weights(g: &GruDirection) -> GruWeights {
    let (h, d) = (g.hidden_size(), g.input_size());
    GruWeights {
        w: [
            matrix(&g.w_z, h, d),
            matrix(&g.w_r, h, d),
            matrix(&g.w_h, h, d),
        ],
        u: [
            matrix(&g.u_z, h, h),
            matrix(&g.u_r, h, h),
            matrix(&g.u_h, h, h),
        ],
        b: [
            g.b_z.data().to_vec(),
            g.b_r.data().to_vec(),
            g.b_h.data().to_vec(),
        ],
    }
}

pub fn bn_oracle(bn: &BatchNorm, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    oracle::batchnorm_infer(
        x,
        &BnParams {
            gamma: bn.gamma.data(),
            beta: bn.beta.data(),
            mean: bn.running_mean.data(),
            var: bn.running_var.data(),
            eps: bn.epsilon,
        },
    )
}

pub fn randomize_bn(bn: &mut BatchNorm, r: &mut impl Rng) {
    for (i, t) in bn.tensors_mut().into_iter().enumerate() {
        t.data_mut().iter_mut().for_each(|v| {
            *v = if i == 3 {
                r.gen_range(0.3..2.0)
            } else {
                r.gen_range(-1.0..1.0)
            }
        });
    }
}

pub fn septemp_oracle(conv: &SeparableTemporalConv, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let c = conv.channels();
    oracle::septemp(
        x,
        &matrix(&conv.depthwise, 3, c),
        &matrix(&conv.pointwise, c, c),
        conv.dilation(),
    )
}

pub fn block_oracle(block: &Block, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let h = bn_oracle(&block.bn1, &oracle::relu(&septemp_oracle(&block.conv1, x)));
    let h = bn_oracle(&block.bn2, &oracle::relu(&septemp_oracle(&block.conv2, &h)));
    x.iter()
        .zip(h)
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p + q).collect())
        .collect()
}

/// Composition of the loop oracles over a whole model, one utterance.
pub fn model_oracle(model: &StConvModel, x: &[Vec<f64>]) -> Vec<f64> {
    let cfg = model.config();
    let mut h = oracle::freq_conv(
        x,
        &matrix(&model.freq_conv.weight, cfg.features, cfg.channels),
    );
    for block in &model.blocks {
        h = block_oracle(block, &h);
    }
    let h = oracle::bgru(
        &h,
        &gru_weights(&model.bgru.forward_dir),
        &gru_weights(&model.bgru.backward_dir),
    );
    let d = cfg.sequence_width();
    let pooled = match &model.pooling {
        Pooling::Swsa(s) => oracle::swsa(&h, &matrix(&s.w, d, d), s.heads(), s.query_index()),
        Pooling::Average(_) => oracle::avg_pool(&h),
    };
    let fc = oracle::dense(
        &pooled,
        &matrix(&model.fc.weight, cfg.fc_out, d),
        model.fc.bias.data(),
    );
    let logits = oracle::dense(
        &fc,
        &matrix(&model.classifier.weight, cfg.num_classes, cfg.fc_out),
        model.classifier.bias.data(),
    );
    oracle::softmax(&logits)
}

pub fn perturbed_model(config: &ModelConfig, seed: u64) -> StConvModel {
    let mut model = StConvModel::build(config, seed).unwrap();
    let mut r = rng(seed + 100);
    for block in &mut model.blocks {
        randomize_bn(&mut block.bn1, &mut r);
        randomize_bn(&mut block.bn2, &mut r);
    }
    for p in [&mut model.fc.bias, &mut model.classifier.bias] {
        p.data_mut()
            .iter_mut()
            .for_each(|v| *v = r.gen_range(-0.5..0.5));
    }
    model
}
