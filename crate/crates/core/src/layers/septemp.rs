use rand::Rng;

use super::{check_grad_shape, dims3, fan_in_uniform, Layer, LayerGrads};
use crate::error::{Error, Result};
use crate::numerics::{gemm_nn, gemm_nt, gemm_tn, Tensor};

pub const KERNEL_TIME: usize = 3;

/// Depthwise-separable temporal convolution: a dilated 3-tap filter per
/// channel followed by a pointwise `C × C` channel mix. Zero padding of
/// `dilation` frames on each side keeps the time length unchanged. No bias.
#[derive(Debug, Clone)]
pub struct SeparableTemporalConv {
    /// `[3, 1, C]`, tap `k` reads frame `t + (k - 1) * dilation`.
    pub depthwise: Tensor,
    /// `[C_in, C_out]`
    pub pointwise: Tensor,
    dilation: usize,
    cache: Option<(Tensor, Vec<f64>)>,
}

impl SeparableTemporalConv {
    pub fn new(depthwise: Tensor, pointwise: Tensor, dilation: usize) -> Result<Self> {
        if dilation == 0 {
            return Err(Error::InvalidArgument("dilation must be positive".into()));
        }
        let c = match *depthwise.shape() {
            [KERNEL_TIME, 1, c] => c,
            _ => {
                return Err(Error::shape(
                    "septemp depthwise",
                    depthwise.shape(),
                    &[3, 1, 0],
                ))
            }
        };
        if pointwise.shape() != [c, c] {
            return Err(Error::shape(
                "septemp pointwise",
                pointwise.shape(),
                &[c, c],
            ));
        }
        Ok(Self {
            depthwise,
            pointwise,
            dilation,
            cache: None,
        })
    }

    pub fn init(channels: usize, dilation: usize, rng: &mut impl Rng) -> Result<Self> {
        let dw = fan_in_uniform(&[KERNEL_TIME, 1, channels], KERNEL_TIME, rng);
        let pw = fan_in_uniform(&[channels, channels], channels, rng);
        Self::new(dw, pw, dilation)
    }

    pub fn channels(&self) -> usize {
        self.pointwise.shape()[0]
    }

    pub fn dilation(&self) -> usize {
        self.dilation
    }

    fn depthwise_pass(&self, x: &[f64], b: usize, t: usize) -> Vec<f64> {
        let c = self.channels();
        let d = self.dilation as isize;
        let k = self.depthwise.data();
        let mut out = vec![0.0; b * t * c];
        for bi in 0..b {
            let base = bi * t * c;
            for ti in 0..t {
                let dst = &mut out[base + ti * c..base + (ti + 1) * c];
                for tap in 0..KERNEL_TIME {
                    let src_t = ti as isize + (tap as isize - 1) * d;
                    if src_t < 0 || src_t >= t as isize {
                        continue;
                    }
                    let src = &x[base + src_t as usize * c..base + (src_t as usize + 1) * c];
                    let taps = &k[tap * c..(tap + 1) * c];
                    for ch in 0..c {
                        dst[ch] += src[ch] * taps[ch];
                    }
                }
            }
        }
        out
    }
}

impl Layer for SeparableTemporalConv {
    fn kind(&self) -> &'static str {
        "separable_temporal_conv"
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let c = self.channels();
        let (b, t) = dims3(self.kind(), x, c)?;
        let dw = self.depthwise_pass(x.data(), b, t);
        let mut out = vec![0.0; b * t * c];
        gemm_nn(&dw, self.pointwise.data(), b * t, c, c, &mut out);
        Tensor::new(vec![b, t, c], out)
    }

    fn forward_train(&mut self, x: &Tensor) -> Result<Tensor> {
        let c = self.channels();
        let (b, t) = dims3(self.kind(), x, c)?;
        let dw = self.depthwise_pass(x.data(), b, t);
        let mut out = vec![0.0; b * t * c];
        gemm_nn(&dw, self.pointwise.data(), b * t, c, c, &mut out);
        self.cache = Some((x.clone(), dw));
        Tensor::new(vec![b, t, c], out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<LayerGrads> {
        let (x, dw) = self
            .cache
            .take()
            .ok_or(Error::MissingForwardCache("separable_temporal_conv"))?;
        let c = self.channels();
        let (b, t) = (x.shape()[0], x.shape()[1]);
        check_grad_shape(self.kind(), grad_out, x.shape())?;
        let g = grad_out.data();

        let mut d_pointwise = vec![0.0; c * c];
        gemm_tn(&dw, g, b * t, c, c, &mut d_pointwise);
        let mut d_dw = vec![0.0; b * t * c];
        gemm_nt(g, self.pointwise.data(), b * t, c, c, &mut d_dw);

        let d = self.dilation as isize;
        let k = self.depthwise.data();
        let xs = x.data();
        let mut d_taps = vec![0.0; KERNEL_TIME * c];
        let mut dx = vec![0.0; b * t * c];
        for bi in 0..b {
            let base = bi * t * c;
            for ti in 0..t {
                let gd = &d_dw[base + ti * c..base + (ti + 1) * c];
                for tap in 0..KERNEL_TIME {
                    let src_t = ti as isize + (tap as isize - 1) * d;
                    if src_t < 0 || src_t >= t as isize {
                        continue;
                    }
                    let off = base + src_t as usize * c;
                    for ch in 0..c {
                        d_taps[tap * c + ch] += gd[ch] * xs[off + ch];
                        dx[off + ch] += gd[ch] * k[tap * c + ch];
                    }
                }
            }
        }
        Ok(LayerGrads {
            input: Tensor::new(vec![b, t, c], dx)?,
            params: vec![
                Tensor::new(vec![KERNEL_TIME, 1, c], d_taps)?,
                Tensor::new(vec![c, c], d_pointwise)?,
            ],
        })
    }

    fn params(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("depthwise", &self.depthwise),
            ("pointwise", &self.pointwise),
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.depthwise, &mut self.pointwise]
    }
}
