use std::fmt;

use log::info;

use super::adam::Adam;
use super::loss::cross_entropy;
use super::schedule::LrSchedule;
use crate::dataset::FeatureSet;
use crate::error::{Error, Result};
use crate::model::StConvModel;
use crate::numerics::{argmax, softmax_in_place};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr_init: f64,
    pub lr_decay_factor: f64,
    pub lr_floor: f64,
    /// Relative dev-loss drop below which the rate decays.
    pub improvement_threshold: f64,
    pub min_epochs_per_lr: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Stop once dev accuracy reaches this value.
    pub stop_at_dev_accuracy: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr_init: 1e-3,
            lr_decay_factor: 0.6,
            lr_floor: 1e-5,
            improvement_threshold: 0.03,
            min_epochs_per_lr: 2,
            max_epochs: 80,
            batch_size: 32,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            stop_at_dev_accuracy: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor < 1.0) {
            return fail("learning-rate decay factor must be in (0, 1)");
        }
        if !(self.lr_floor > 0.0) {
            return fail("learning-rate floor must be positive");
        }
        if !(self.lr_init > 0.0) || !self.lr_init.is_finite() {
            return fail("initial learning rate must be positive");
        }
        if self.batch_size == 0 {
            return fail("batch size must be positive");
        }
        if self.max_epochs == 0 {
            return fail("max_epochs must be at least 1");
        }
        Ok(())
    }
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Rate used during the epoch.
    pub lr: f64,
    pub train_loss: f64,
    pub dev_loss: f64,
    pub dev_accuracy: f64,
}

impl EpochLog {
    pub const HEADER: &'static str = "epoch\tlr\ttrain_loss\tdev_loss\tdev_acc";
}

impl fmt::Display for EpochLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{:e}\t{:.6}\t{:.6}\t{:.6}",
            self.epoch, self.lr, self.train_loss, self.dev_loss, self.dev_accuracy
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Checkpoint with the highest dev accuracy (earliest on ties).
    pub best: StConvModel,
    pub best_epoch: usize,
    pub best_dev_accuracy: f64,
    pub last: StConvModel,
    pub log: Vec<EpochLog>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
}

/// Mean loss and accuracy in inference mode.
pub fn evaluate(model: &StConvModel, set: &FeatureSet, batch_size: usize) -> Result<Evaluation> {
    if set.is_empty() {
        return Err(Error::EmptySplit("evaluation"));
    }
    let order: Vec<usize> = (0..set.len()).collect();
    let (mut loss, mut correct) = (0.0, 0usize);
    for chunk in order.chunks(batch_size.max(1)) {
        let (x, labels) = set.batch(chunk)?;
        let p = model.infer_batch(&x)?;
        let (l, _) = cross_entropy(&p, &labels)?;
        loss += l * chunk.len() as f64;
        let k = p.shape()[1];
        correct += p
            .data()
            .chunks(k)
            .zip(&labels)
            .filter(|(row, &label)| argmax(row) == label)
            .count();
    }
    Ok(Evaluation {
        loss: loss / set.len() as f64,
        accuracy: correct as f64 / set.len() as f64,
    })
}

pub fn train(
    mut model: StConvModel,
    train_set: &FeatureSet,
    dev_set: &FeatureSet,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptySplit("train"));
    }
    if dev_set.is_empty() {
        return Err(Error::EmptySplit("dev"));
    }
    let mut adam = Adam::new(cfg.beta1, cfg.beta2, cfg.epsilon);
    let mut schedule = LrSchedule::new(
        cfg.lr_init,
        cfg.lr_decay_factor,
        cfg.lr_floor,
        cfg.improvement_threshold,
        cfg.min_epochs_per_lr,
    );
    let classes = model.config().num_classes;
    let mut log = Vec::new();
    let mut best: Option<(StConvModel, usize, f64)> = None;

    for epoch in 1..=cfg.max_epochs {
        let lr = schedule.lr;
        let order = train_set.epoch_order(cfg.seed, epoch as u64);
        let mut loss_sum = 0.0;
        for (batch_index, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let (x, labels) = train_set.batch(chunk)?;
            let mut p = model.forward_train(&x)?;
            for row in p.data_mut().chunks_mut(classes) {
                softmax_in_place(row).map_err(|_| Error::NonFiniteLoss {
                    epoch,
                    batch: batch_index,
                })?;
            }
            let (loss, grad) = cross_entropy(&p, &labels)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_index,
                });
            }
            loss_sum += loss * chunk.len() as f64;
            let grads = model.backward(&grad)?;
            adam.step(model.params_mut(), &grads, lr)?;
        }
        let dev = evaluate(&model, dev_set, cfg.batch_size)?;
        let row = EpochLog {
            epoch,
            lr,
            train_loss: loss_sum / train_set.len() as f64,
            dev_loss: dev.loss,
            dev_accuracy: dev.accuracy,
        };
        info!("{row}");
        log.push(row);
        if best.as_ref().is_none_or(|(_, _, acc)| dev.accuracy > *acc) {
            best = Some((model.clone(), epoch, dev.accuracy));
        }
        schedule.end_epoch(dev.loss);
        if cfg
            .stop_at_dev_accuracy
            .is_some_and(|target| dev.accuracy >= target)
        {
            break;
        }
    }
    let (best, best_epoch, best_dev_accuracy) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        best,
        best_epoch,
        best_dev_accuracy,
        last: model,
        log,
    })
}
