use rand::Rng;

use super::{BatchNorm, Layer, LayerGrads, SeparableTemporalConv};
use crate::error::{Error, Result};
use crate::numerics::{relu, Tensor};

/// Residual block: two separable temporal convs, each followed by ReLU and
/// batch norm, with the block input added after the second batch norm.
#[derive(Debug, Clone)]
pub struct Block {
    pub conv1: SeparableTemporalConv,
    pub bn1: BatchNorm,
    pub conv2: SeparableTemporalConv,
    pub bn2: BatchNorm,
    /// Pre-activation outputs of both convs, for the ReLU masks.
    cache: Option<(Tensor, Tensor)>,
}

fn relu_tensor(x: &Tensor) -> Tensor {
    x.map(relu)
}

fn relu_backward(grad: &Tensor, pre: &Tensor) -> Tensor {
    let mut g = grad.clone();
    g.data_mut().iter_mut().zip(pre.data()).for_each(|(g, &p)| {
        if p <= 0.0 {
            *g = 0.0
        }
    });
    g
}

impl Block {
    pub fn new(
        conv1: SeparableTemporalConv,
        bn1: BatchNorm,
        conv2: SeparableTemporalConv,
        bn2: BatchNorm,
    ) -> Result<Self> {
        let c = conv1.channels();
        if conv2.channels() != c || bn1.channels() != c || bn2.channels() != c {
            return Err(Error::InvalidArgument(
                "block channel counts must agree".into(),
            ));
        }
        Ok(Self {
            conv1,
            bn1,
            conv2,
            bn2,
            cache: None,
        })
    }

    pub fn init(channels: usize, dilations: (usize, usize), rng: &mut impl Rng) -> Result<Self> {
        let conv1 = SeparableTemporalConv::init(channels, dilations.0, rng)?;
        let conv2 = SeparableTemporalConv::init(channels, dilations.1, rng)?;
        Self::new(
            conv1,
            BatchNorm::new(channels),
            conv2,
            BatchNorm::new(channels),
        )
    }

    pub fn channels(&self) -> usize {
        self.conv1.channels()
    }
}

impl Layer for Block {
    fn kind(&self) -> &'static str {
        "block"
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let h = self.bn1.forward(&relu_tensor(&self.conv1.forward(x)?))?;
        let mut y = self.bn2.forward(&relu_tensor(&self.conv2.forward(&h)?))?;
        y.add_assign(x)?;
        Ok(y)
    }

    fn forward_train(&mut self, x: &Tensor) -> Result<Tensor> {
        let a1 = self.conv1.forward_train(x)?;
        let h = self.bn1.forward_train(&relu_tensor(&a1))?;
        let a2 = self.conv2.forward_train(&h)?;
        let mut y = self.bn2.forward_train(&relu_tensor(&a2))?;
        y.add_assign(x)?;
        self.cache = Some((a1, a2));
        Ok(y)
    }

    fn backward(&mut self, grad_out: &Tensor) -> Result<LayerGrads> {
        let (a1, a2) = self
            .cache
            .take()
            .ok_or(Error::MissingForwardCache("block"))?;
        let bn2 = self.bn2.backward(grad_out)?;
        let conv2 = self.conv2.backward(&relu_backward(&bn2.input, &a2))?;
        let bn1 = self.bn1.backward(&conv2.input)?;
        let conv1 = self.conv1.backward(&relu_backward(&bn1.input, &a1))?;
        let mut input = conv1.input;
        input.add_assign(grad_out)?;
        let params = conv1
            .params
            .into_iter()
            .chain(bn1.params)
            .chain(conv2.params)
            .chain(bn2.params)
            .collect();
        Ok(LayerGrads { input, params })
    }

    fn params(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("conv1.depthwise", &self.conv1.depthwise),
            ("conv1.pointwise", &self.conv1.pointwise),
            ("bn1.gamma", &self.bn1.gamma),
            ("bn1.beta", &self.bn1.beta),
            ("conv2.depthwise", &self.conv2.depthwise),
            ("conv2.pointwise", &self.conv2.pointwise),
            ("bn2.gamma", &self.bn2.gamma),
            ("bn2.beta", &self.bn2.beta),
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.conv1.depthwise,
            &mut self.conv1.pointwise,
            &mut self.bn1.gamma,
            &mut self.bn1.beta,
            &mut self.conv2.depthwise,
            &mut self.conv2.pointwise,
            &mut self.bn2.gamma,
            &mut self.bn2.beta,
        ]
    }

    fn buffers(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("bn1.running_mean", &self.bn1.running_mean),
            ("bn1.running_var", &self.bn1.running_var),
            ("bn2.running_mean", &self.bn2.running_mean),
            ("bn2.running_var", &self.bn2.running_var),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.conv1.depthwise,
            &mut self.conv1.pointwise,
            &mut self.bn1.gamma,
            &mut self.bn1.beta,
            &mut self.conv2.depthwise,
            &mut self.conv2.pointwise,
            &mut self.bn2.gamma,
            &mut self.bn2.beta,
            &mut self.bn1.running_mean,
            &mut self.bn1.running_var,
            &mut self.bn2.running_mean,
            &mut self.bn2.running_var,
        ]
    }
}
