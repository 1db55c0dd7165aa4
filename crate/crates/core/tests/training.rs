mod common;

use common::scenarios::run_scenarios;
use common::{rng, synthetic_set, uniform};
use proptest::prelude::*;
use stconv_core::model::Attention;
use stconv_core::numerics::softmax;
use stconv_core::trainer::{cross_entropy, evaluate, train, Adam, LrSchedule, TrainConfig};
use stconv_core::{Error, ModelConfig, StConvModel, Tensor};

#[test]
fn lr_schedule_scenario_table() {
    let failures = run_scenarios();
    assert!(failures.is_empty(), "{failures:?}");
}

#[test]
fn schedule_through_epochs_waits_two_epochs_after_decay() {
    let mut s = LrSchedule::default();
    let lrs: Vec<f64> = [2.0, 2.0, 2.0, 2.0, 2.0, 2.0]
        .iter()
        .map(|&l| s.end_epoch(l))
        .collect();
    assert_eq!(lrs[0], 1e-3);
    assert!((lrs[1] - 6e-4).abs() < 1e-18);
    assert!((lrs[2] - 6e-4).abs() < 1e-18);
    assert!((lrs[3] - 3.6e-4).abs() < 1e-18);
}

proptest! {
    #[test]
    fn lr_never_rises_or_drops_below_floor(losses in prop::collection::vec(0.01f64..5.0, 1..60)) {
        let mut s = LrSchedule::default();
        let mut lr = s.lr;
        let mut since_change = 0usize;
        for l in losses {
            let next = s.end_epoch(l);
            since_change += 1;
            prop_assert!(next <= lr && next >= 1e-5);
            if next != lr {
                prop_assert!(since_change >= 2);
                since_change = 0;
            }
            lr = next;
        }
    }
}

fn tiny_config() -> ModelConfig {
    ModelConfig {
        frames: 12,
        features: 8,
        channels: 6,
        num_blocks: 1,
        bgru_hidden: 4,
        attention: Attention::Swsa,
        heads: 2,
        fc_out: 6,
        num_classes: 4,
        query_index: 5,
    }
}

fn posteriors(logits: &Tensor, k: usize) -> Tensor {
    let mut p = logits.clone();
    for row in p.data_mut().chunks_mut(k) {
        row.copy_from_slice(
            softmax(&Tensor::from_vec(row.to_vec()).unwrap())
                .unwrap()
                .data(),
        );
    }
    p
}

#[test]
fn one_small_adam_step_descends() {
    for seed in 0..3 {
        let mut model = StConvModel::build(&tiny_config(), seed).unwrap();
        let x = uniform(&[4, 12, 8], 1.0, &mut rng(seed));
        let labels = [0, 1, 2, 3];
        let (before, grad) =
            cross_entropy(&posteriors(&model.forward_train(&x).unwrap(), 4), &labels).unwrap();
        let grads = model.backward(&grad).unwrap();
        Adam::default()
            .step(model.params_mut(), &grads, 1e-4)
            .unwrap();
        let (after, _) = cross_entropy(
            &posteriors(&model.clone().forward_train(&x).unwrap(), 4),
            &labels,
        )
        .unwrap();
        assert!(after < before, "seed {seed}: {before} -> {after}");
    }
}

fn short_run(seed: u64) -> TrainConfig {
    TrainConfig {
        max_epochs: 6,
        batch_size: 8,
        lr_init: 5e-3,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn training_is_deterministic_and_keeps_best_dev_checkpoint() {
    let train_set = synthetic_set(40, 12, 8, 4, 1);
    let dev_set = synthetic_set(20, 12, 8, 4, 2);
    let model = StConvModel::build(&tiny_config(), 3).unwrap();
    let a = train(model.clone(), &train_set, &dev_set, &short_run(9)).unwrap();
    let b = train(model, &train_set, &dev_set, &short_run(9)).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.log.len(), 6);

    let max = a.log.iter().map(|r| r.dev_accuracy).fold(0.0, f64::max);
    assert_eq!(a.best_dev_accuracy, max);
    assert_eq!(evaluate(&a.best, &dev_set, 8).unwrap().accuracy, max);
    assert!(a.best_dev_accuracy >= a.log.last().unwrap().dev_accuracy);
    assert!(a.log.windows(2).all(|w| w[1].lr <= w[0].lr));
}

#[test]
fn small_model_overfits_separable_set() {
    let set = synthetic_set(48, 12, 8, 4, 5);
    let cfg = TrainConfig {
        max_epochs: 100,
        batch_size: 8,
        lr_init: 5e-3,
        stop_at_dev_accuracy: Some(1.0),
        ..TrainConfig::default()
    };
    let out = train(
        StConvModel::build(&tiny_config(), 1).unwrap(),
        &set,
        &set,
        &cfg,
    )
    .unwrap();
    assert!(out.best_dev_accuracy >= 0.99, "{:?}", out.log.last());
}

#[test]
fn rejects_empty_splits_and_bad_config() {
    let set = synthetic_set(8, 12, 8, 4, 5);
    let empty = stconv_core::dataset::FeatureSet::new(12, 8);
    let model = StConvModel::build(&tiny_config(), 1).unwrap();
    assert!(matches!(
        train(model.clone(), &empty, &set, &short_run(0)),
        Err(Error::EmptySplit(_))
    ));
    assert!(matches!(
        train(model.clone(), &set, &empty, &short_run(0)),
        Err(Error::EmptySplit(_))
    ));
    let bad = TrainConfig {
        lr_decay_factor: 1.5,
        ..short_run(0)
    };
    assert!(matches!(
        train(model, &set, &set, &bad),
        Err(Error::InvalidArgument(_))
    ));
}
