use super::{check_grad_shape, Layer, LayerGrads};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Mean over the time axis, `[B, T, D]` → `[B, D]`. Stand-in for attention
/// in the average-pooling variant.
#[derive(Debug, Clone, Default)]
pub struct AvgPool {
    cache: Option<Vec<usize>>,
}

impl AvgPool {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Layer for AvgPool {
    fn kind(&self) -> &'static str {
        "avg_pool"
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (b, t, d) = match *x.shape() {
            [b, t, d] => (b, t, d),
            _ => return Err(Error::shape(self.kind(), x.shape(), &[0, 0, 0])),
        };
        let mut out = vec![0.0; b * d];
        for bi in 0..b {
            let o = &mut out[bi * d..(bi + 1) * d];
            for row in x.data()[bi * t * d..(bi + 1) * t * d].chunks(d) {
                o.iter_mut().zip(row).for_each(|(a, v)| *a += v);
            }
            o.iter_mut().for_each(|a| *a /= t as f64);
        }
        Tensor::new(vec![b, d], out)
    }

    fn forward_train(&mut self, x: &Tensor) -> Result<Tensor> {
        let y = self.forward(x)?;
        self.cache = Some(x.shape().to_vec());
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<LayerGrads> {
        let shape = self
            .cache
            .take()
            .ok_or(Error::MissingForwardCache("avg_pool"))?;
        let (b, t, d) = (shape[0], shape[1], shape[2]);
        check_grad_shape(self.kind(), grad_out, &[b, d])?;
        let input = Tensor::from_fn(&shape, |i| {
            grad_out.data()[(i / (t * d)) * d + i % d] / t as f64
        });
        Ok(LayerGrads {
            input,
            params: Vec::new(),
        })
    }

    fn params(&self) -> Vec<(&'static str, &Tensor)> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        Vec::new()
    }
}
