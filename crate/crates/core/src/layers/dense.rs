use rand::Rng;

use super::{check_grad_shape, fan_in_uniform, Layer, LayerGrads};
use crate::error::{Error, Result};
use crate::numerics::{gemm_nn, gemm_nt, gemm_tn, Tensor};

/// Fully connected layer `y = x Wᵀ + b` on `[B, in]`.
#[derive(Debug, Clone)]
pub struct Dense {
    /// `[out, in]`
    pub weight: Tensor,
    pub bias: Tensor,
    cache: Option<Tensor>,
}

impl Dense {
    pub fn new(weight: Tensor, bias: Tensor) -> Result<Self> {
        let out = match *weight.shape() {
            [o, _] => o,
            _ => return Err(Error::shape("dense weight", weight.shape(), &[0, 0])),
        };
        if bias.shape() != [out] {
            return Err(Error::shape("dense bias", bias.shape(), &[out]));
        }
        Ok(Self {
            weight,
            bias,
            cache: None,
        })
    }

    pub fn init(input: usize, output: usize, rng: &mut impl Rng) -> Self {
        Self::new(
            fan_in_uniform(&[output, input], input, rng),
            Tensor::zeros(&[output]),
        )
        .unwrap()
    }

    pub fn input_size(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn output_size(&self) -> usize {
        self.weight.shape()[0]
    }
}

impl Layer for Dense {
    fn kind(&self) -> &'static str {
        "dense"
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (i, o) = (self.input_size(), self.output_size());
        let b = match *x.shape() {
            [b, n] if n == i => b,
            _ => return Err(Error::shape(self.kind(), x.shape(), &[0, i])),
        };
        let mut out: Vec<f64> = self
            .bias
            .data()
            .iter()
            .copied()
            .cycle()
            .take(b * o)
            .collect();
        gemm_nt(x.data(), self.weight.data(), b, i, o, &mut out);
        Tensor::new(vec![b, o], out)
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
            .ok_or(Error::MissingForwardCache("dense"))?;
        let (b, i, o) = (x.shape()[0], self.input_size(), self.output_size());
        check_grad_shape(self.kind(), grad_out, &[b, o])?;
        let mut dw = vec![0.0; o * i];
        gemm_tn(grad_out.data(), x.data(), b, o, i, &mut dw);
        let mut db = vec![0.0; o];
        grad_out
            .data()
            .chunks(o)
            .for_each(|row| db.iter_mut().zip(row).for_each(|(a, g)| *a += g));
        let mut dx = vec![0.0; b * i];
        gemm_nn(grad_out.data(), self.weight.data(), b, o, i, &mut dx);
        Ok(LayerGrads {
            input: Tensor::new(vec![b, i], dx)?,
            params: vec![Tensor::new(vec![o, i], dw)?, Tensor::new(vec![o], db)?],
        })
    }

    fn params(&self) -> Vec<(&'static str, &Tensor)> {
        vec![("weight", &self.weight), ("bias", &self.bias)]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weight, &mut self.bias]
    }
}
