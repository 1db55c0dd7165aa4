use super::{check_grad_shape, Layer, LayerGrads};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub const BN_MOMENTUM: f64 = 0.9;
pub const BN_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Batch normalization over the trailing channel axis; statistics pool every
/// leading axis (batch and time).
#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Tensor,
    pub running_var: Tensor,
    pub momentum: f64,
    pub epsilon: f64,
    cache: Option<Cache>,
}

#[derive(Debug, Clone)]
struct Cache {
    normalized: Vec<f64>,
    inv_std: Vec<f64>,
    shape: Vec<usize>,
}

impl BatchNorm {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: Tensor::filled(&[channels], 1.0),
            beta: Tensor::zeros(&[channels]),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::filled(&[channels], 1.0),
            momentum: BN_MOMENTUM,
            epsilon: BN_EPSILON,
            cache: None,
        }
    }

    /// A batch norm that is exactly the identity in inference mode.
    pub fn identity(channels: usize) -> Self {
        let mut bn = Self::new(channels);
        bn.running_var = Tensor::filled(&[channels], 1.0 - bn.epsilon);
        bn
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    fn rows(&self, x: &Tensor) -> Result<usize> {
        let c = self.channels();
        if x.rank() < 2 || x.shape()[x.rank() - 1] != c {
            return Err(Error::shape("batch_norm", x.shape(), &[0, c]));
        }
        Ok(x.len() / c)
    }

    pub fn forward_mode(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor> {
        match mode {
            Mode::Infer => self.forward(x),
            Mode::Train => self.forward_train(x),
        }
    }
}

impl Layer for BatchNorm {
    fn kind(&self) -> &'static str {
        "batch_norm"
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let c = self.channels();
        self.rows(x)?;
        let scale: Vec<f64> = (0..c)
            .map(|ch| self.gamma.data()[ch] / (self.running_var.data()[ch] + self.epsilon).sqrt())
            .collect();
        let mut out = x.clone();
        for row in out.data_mut().chunks_mut(c) {
            for ch in 0..c {
                row[ch] =
                    (row[ch] - self.running_mean.data()[ch]) * scale[ch] + self.beta.data()[ch];
            }
        }
        Ok(out)
    }

    fn forward_train(&mut self, x: &Tensor) -> Result<Tensor> {
        let c = self.channels();
        let n = self.rows(x)? as f64;
        let mut mean = vec![0.0; c];
        for row in x.data().chunks(c) {
            mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; c];
        for row in x.data().chunks(c) {
            for ch in 0..c {
                let d = row[ch] - mean[ch];
                var[ch] += d * d;
            }
        }
        var.iter_mut().for_each(|v| *v /= n);
        let inv_std: Vec<f64> = var
            .iter()
            .map(|v| 1.0 / (v + self.epsilon).sqrt())
            .collect();

        let mut normalized = x.data().to_vec();
        let mut out = vec![0.0; x.len()];
        for (xr, yr) in normalized.chunks_mut(c).zip(out.chunks_mut(c)) {
            for ch in 0..c {
                xr[ch] = (xr[ch] - mean[ch]) * inv_std[ch];
                yr[ch] = xr[ch] * self.gamma.data()[ch] + self.beta.data()[ch];
            }
        }
        let m = self.momentum;
        for ch in 0..c {
            let rm = &mut self.running_mean.data_mut()[ch];
            *rm = m * *rm + (1.0 - m) * mean[ch];
            let rv = &mut self.running_var.data_mut()[ch];
            *rv = m * *rv + (1.0 - m) * var[ch];
        }
        self.cache = Some(Cache {
            normalized,
            inv_std,
            shape: x.shape().to_vec(),
        });
        Tensor::new(x.shape().to_vec(), out)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<LayerGrads> {
        let cache = self
            .cache
            .take()
            .ok_or(Error::MissingForwardCache("batch_norm"))?;
        check_grad_shape(self.kind(), grad_out, &cache.shape)?;
        let c = self.channels();
        let n = (grad_out.len() / c) as f64;
        let mut d_gamma = vec![0.0; c];
        let mut d_beta = vec![0.0; c];
        for (g, xh) in grad_out.data().chunks(c).zip(cache.normalized.chunks(c)) {
            for ch in 0..c {
                d_beta[ch] += g[ch];
                d_gamma[ch] += g[ch] * xh[ch];
            }
        }
        let mut dx = vec![0.0; grad_out.len()];
        for ((d, g), xh) in dx
            .chunks_mut(c)
            .zip(grad_out.data().chunks(c))
            .zip(cache.normalized.chunks(c))
        {
            for ch in 0..c {
                let k = self.gamma.data()[ch] * cache.inv_std[ch] / n;
                d[ch] = k * (n * g[ch] - d_beta[ch] - xh[ch] * d_gamma[ch]);
            }
        }
        Ok(LayerGrads {
            input: Tensor::new(cache.shape, dx)?,
            params: vec![
                Tensor::new(vec![c], d_gamma)?,
                Tensor::new(vec![c], d_beta)?,
            ],
        })
    }

    fn params(&self) -> Vec<(&'static str, &Tensor)> {
        vec![("gamma", &self.gamma), ("beta", &self.beta)]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.gamma, &mut self.beta]
    }

    fn buffers(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("running_mean", &self.running_mean),
            ("running_var", &self.running_var),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.gamma,
            &mut self.beta,
            &mut self.running_mean,
            &mut self.running_var,
        ]
    }
}
