use rand::Rng;

use super::{check_grad_shape, dims3, fan_in_uniform, Layer, LayerGrads};
use crate::error::{Error, Result};
use crate::numerics::{gemm_nn, gemm_nt, gemm_tn, Tensor};

/// First layer: a `1 × F` kernel with `C` filters that spans the whole
/// frequency axis, so each output frame has a single frequency bin.
/// No padding, stride 1, no bias.
#[derive(Debug, Clone)]
pub struct FreqCollapseConv {
    /// `[1, F, 1, C]`: time, frequency, input channel, output channel.
    pub weight: Tensor,
    cache: Option<Tensor>,
}

impl FreqCollapseConv {
    pub fn new(weight: Tensor) -> Result<Self> {
        match *weight.shape() {
            [1, _, 1, _] => Ok(Self {
                weight,
                cache: None,
            }),
            _ => Err(Error::shape(
                "freq_collapse_conv",
                weight.shape(),
                &[1, 0, 1, 0],
            )),
        }
    }

    pub fn init(features: usize, channels: usize, rng: &mut impl Rng) -> Self {
        Self::new(fan_in_uniform(&[1, features, 1, channels], features, rng)).unwrap()
    }

    pub fn features(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn channels(&self) -> usize {
        self.weight.shape()[3]
    }

    /// Single-example form: `[T, F]` → `[T, 1, C]`.
    pub fn forward_single(&self, x: &Tensor) -> Result<Tensor> {
        let (t, f) = match *x.shape() {
            [t, f] => (t, f),
            _ => {
                return Err(Error::shape(
                    "freq_collapse_conv",
                    x.shape(),
                    &[0, self.features()],
                ))
            }
        };
        let y = self.forward(&x.clone().reshape(&[1, t, f])?)?;
        y.reshape(&[t, 1, self.channels()])
    }
}

impl Layer for FreqCollapseConv {
    fn kind(&self) -> &'static str {
        "freq_collapse_conv"
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (b, t) = dims3(self.kind(), x, self.features())?;
        let (f, c) = (self.features(), self.channels());
        let mut out = vec![0.0; b * t * c];
        gemm_nn(x.data(), self.weight.data(), b * t, f, c, &mut out);
        Tensor::new(vec![b, t, c], out)
    }

    fn forward_train(&mut self, x: &Tensor) -> Result<Tensor> {
        let y = self.forward(x)?;
        self.cache = Some(x.clone());
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<LayerGrads> {
        let x = self
            .cache
            .take()
            .ok_or(Error::MissingForwardCache("freq_collapse_conv"))?;
        let (b, t, f, c) = (x.shape()[0], x.shape()[1], self.features(), self.channels());
        check_grad_shape(self.kind(), grad_out, &[b, t, c])?;
        let mut dw = vec![0.0; f * c];
        gemm_tn(x.data(), grad_out.data(), b * t, f, c, &mut dw);
        let mut dx = vec![0.0; b * t * f];
        gemm_nt(grad_out.data(), self.weight.data(), b * t, c, f, &mut dx);
        Ok(LayerGrads {
            input: Tensor::new(vec![b, t, f], dx)?,
            params: vec![Tensor::new(self.weight.shape().to_vec(), dw)?],
        })
    }

    fn params(&self) -> Vec<(&'static str, &Tensor)> {
        vec![("weight", &self.weight)]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weight]
    }
}
