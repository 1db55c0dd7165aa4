use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{Attention, ModelConfig};
use crate::error::{Error, Result};
use crate::layers::{AvgPool, Bgru, Block, Dense, FreqCollapseConv, Layer, Swsa};
use crate::numerics::{softmax_in_place, Tensor};

/// Sequence-to-vector stage after the BGRU.
#[derive(Debug, Clone)]
pub enum Pooling {
    Swsa(Swsa),
    Average(AvgPool),
}

impl Pooling {
    fn layer(&self) -> &dyn Layer {
        match self {
            Pooling::Swsa(l) => l,
            Pooling::Average(l) => l,
        }
    }

    fn layer_mut(&mut self) -> &mut dyn Layer {
        match self {
            Pooling::Swsa(l) => l,
            Pooling::Average(l) => l,
        }
    }

    fn prefix(&self) -> &'static str {
        match self {
            Pooling::Swsa(_) => "swsa",
            Pooling::Average(_) => "avg_pool",
        }
    }
}

/// Frequency-collapsing conv → residual separable blocks → BGRU →
/// SWSA (or average pooling) → FC → output layer with softmax.
#[derive(Debug, Clone)]
pub struct StConvModel {
    config: ModelConfig,
    pub freq_conv: FreqCollapseConv,
    pub blocks: Vec<Block>,
    pub bgru: Bgru,
    pub pooling: Pooling,
    pub fc: Dense,
    pub classifier: Dense,
}

impl StConvModel {
    /// Build with seeded fan-in uniform weights, zero biases and unit batch norms.
    pub fn build(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = config.channels;
        let freq_conv = FreqCollapseConv::init(config.features, c, &mut rng);
        let dilations = config.dilations();
        let blocks = dilations
            .chunks(2)
            .map(|d| Block::init(c, (d[0], d[1]), &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let bgru = Bgru::init(c, config.bgru_hidden, &mut rng);
        let width = config.sequence_width();
        let pooling = match config.attention {
            Attention::Swsa => Pooling::Swsa(Swsa::init(
                width,
                config.heads,
                config.query_index,
                &mut rng,
            )?),
            Attention::Average => Pooling::Average(AvgPool::new()),
        };
        let fc = Dense::init(width, config.fc_out, &mut rng);
        let classifier = Dense::init(config.fc_out, config.num_classes, &mut rng);
        Ok(Self {
            config: config.clone(),
            freq_conv,
            blocks,
            bgru,
            pooling,
            fc,
            classifier,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        let (t, f) = (self.config.frames, self.config.features);
        match *x.shape() {
            [_, xt, xf] if xt == t && xf == f => Ok(()),
            _ => Err(Error::shape("model input", x.shape(), &[0, t, f])),
        }
    }

    /// Pre-softmax outputs for a batch `[B, T, F]` → `[B, classes]`.
    pub fn logits(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let mut h = self.freq_conv.forward(x)?;
        for block in &self.blocks {
            h = block.forward(&h)?;
        }
        let h = self.bgru.forward(&h)?;
        let h = self.pooling.layer().forward(&h)?;
        let h = self.fc.forward(&h)?;
        self.classifier.forward(&h)
    }

    /// Class posteriors for a batch `[B, T, F]` → `[B, classes]`.
    pub fn infer_batch(&self, x: &Tensor) -> Result<Tensor> {
        let mut p = self.logits(x)?;
        for row in p.data_mut().chunks_mut(self.config.num_classes) {
            softmax_in_place(row)?;
        }
        Ok(p)
    }

    /// Class posteriors for one utterance `[T, F]` → `[classes]`.
    pub fn forward(&self, features: &Tensor) -> Result<Tensor> {
        let (t, f) = (self.config.frames, self.config.features);
        if features.shape() != [t, f] {
            return Err(Error::shape("model input", features.shape(), &[t, f]));
        }
        let p = self.infer_batch(&features.clone().reshape(&[1, t, f])?)?;
        p.reshape(&[self.config.num_classes])
    }

    /// Training forward pass (batch-statistics batch norm); returns logits.
    pub fn forward_train(&mut self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let mut h = self.freq_conv.forward_train(x)?;
        for block in &mut self.blocks {
            h = block.forward_train(&h)?;
        }
        let h = self.bgru.forward_train(&h)?;
        let h = self.pooling.layer_mut().forward_train(&h)?;
        let h = self.fc.forward_train(&h)?;
        self.classifier.forward_train(&h)
    }

    /// Gradients of every parameter, in [`Self::named_params`] order, from the
    /// gradient of the loss with respect to the logits.
    pub fn backward(&mut self, grad_logits: &Tensor) -> Result<Vec<Tensor>> {
        let classifier = self.classifier.backward(grad_logits)?;
        let fc = self.fc.backward(&classifier.input)?;
        let pool = self.pooling.layer_mut().backward(&fc.input)?;
        let gru = self.bgru.backward(&pool.input)?;
        let mut g = gru.input;
        let mut block_grads = Vec::with_capacity(self.blocks.len());
        for block in self.blocks.iter_mut().rev() {
            let grads = block.backward(&g)?;
            g = grads.input;
            block_grads.push(grads.params);
        }
        let conv = self.freq_conv.backward(&g)?;
        let mut out = conv.params;
        out.extend(block_grads.into_iter().rev().flatten());
        out.extend(gru.params);
        out.extend(pool.params);
        out.extend(fc.params);
        out.extend(classifier.params);
        Ok(out)
    }

    fn layers(&self) -> Vec<(String, &dyn Layer)> {
        let mut out: Vec<(String, &dyn Layer)> = vec![("freq_conv".into(), &self.freq_conv)];
        for (i, b) in self.blocks.iter().enumerate() {
            out.push((format!("block{i}"), b));
        }
        out.push(("bgru".into(), &self.bgru));
        out.push((self.pooling.prefix().into(), self.pooling.layer()));
        out.push(("fc".into(), &self.fc));
        out.push(("classifier".into(), &self.classifier));
        out
    }

    fn layers_mut(&mut self) -> Vec<&mut dyn Layer> {
        let mut out: Vec<&mut dyn Layer> = vec![&mut self.freq_conv];
        for b in &mut self.blocks {
            out.push(b);
        }
        out.push(&mut self.bgru);
        out.push(self.pooling.layer_mut());
        out.push(&mut self.fc);
        out.push(&mut self.classifier);
        out
    }

    pub fn named_params(&self) -> Vec<(String, &Tensor)> {
        self.layers()
            .into_iter()
            .flat_map(|(prefix, l)| {
                l.params()
                    .into_iter()
                    .map(move |(n, t)| (format!("{prefix}.{n}"), t))
            })
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers_mut()
            .into_iter()
            .flat_map(|l| l.params_mut())
            .collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.named_params().iter().map(|(_, t)| t.len()).sum()
    }

    /// Every persisted tensor (parameters and buffers) in declaration order.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        self.layers()
            .into_iter()
            .flat_map(|(prefix, l)| {
                l.params()
                    .into_iter()
                    .chain(l.buffers())
                    .map(move |(n, t)| (format!("{prefix}.{n}"), t))
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers_mut()
            .into_iter()
            .flat_map(|l| l.tensors_mut())
            .collect()
    }
}
