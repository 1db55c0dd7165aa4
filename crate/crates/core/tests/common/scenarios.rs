//! Scripted learning-rate decisions covering every branch of the schedule.

use stconv_core::trainer::LrSchedule;

pub struct Scenario {
    name: &'static str,
    lr: f64,
    epochs_at_lr: usize,
    prev: f64,
    curr: f64,
    expect_lr: f64,
    expect_epochs: usize,
}

pub const SCENARIOS: &[Scenario] = &[
    Scenario {
        name: "held 0 epochs, no improvement",
        lr: 1e-3,
        epochs_at_lr: 0,
        prev: 1.0,
        curr: 1.2,
        expect_lr: 1e-3,
        expect_epochs: 0,
    },
    Scenario {
        name: "held 1 epoch, no improvement",
        lr: 1e-3,
        epochs_at_lr: 1,
        prev: 1.0,
        curr: 0.99,
        expect_lr: 1e-3,
        expect_epochs: 1,
    },
    Scenario {
        name: "held 1 epoch, improvement",
        lr: 1e-3,
        epochs_at_lr: 1,
        prev: 1.0,
        curr: 0.5,
        expect_lr: 1e-3,
        expect_epochs: 1,
    },
    Scenario {
        name: "held 2 epochs, 2% drop",
        lr: 1e-3,
        epochs_at_lr: 2,
        prev: 1.0,
        curr: 0.98,
        expect_lr: 6e-4,
        expect_epochs: 0,
    },
    Scenario {
        name: "held 2 epochs, loss rises",
        lr: 1e-3,
        epochs_at_lr: 2,
        prev: 1.0,
        curr: 1.5,
        expect_lr: 6e-4,
        expect_epochs: 0,
    },
    Scenario {
        name: "held 2 epochs, 10% drop",
        lr: 1e-3,
        epochs_at_lr: 2,
        prev: 1.0,
        curr: 0.90,
        expect_lr: 1e-3,
        expect_epochs: 2,
    },
    Scenario {
        name: "held 2 epochs, 3.1% drop",
        lr: 1e-3,
        epochs_at_lr: 2,
        prev: 2.0,
        curr: 1.938,
        expect_lr: 1e-3,
        expect_epochs: 2,
    },
    Scenario {
        name: "held 5 epochs, 2.9% drop",
        lr: 5e-4,
        epochs_at_lr: 5,
        prev: 2.0,
        curr: 1.942,
        expect_lr: 3e-4,
        expect_epochs: 0,
    },
    Scenario {
        name: "decay clamped at floor",
        lr: 1.2e-5,
        epochs_at_lr: 2,
        prev: 1.0,
        curr: 1.0,
        expect_lr: 1e-5,
        expect_epochs: 0,
    },
    Scenario {
        name: "at floor stays at floor",
        lr: 1e-5,
        epochs_at_lr: 3,
        prev: 1.0,
        curr: 1.0,
        expect_lr: 1e-5,
        expect_epochs: 0,
    },
    Scenario {
        name: "at floor with improvement",
        lr: 1e-5,
        epochs_at_lr: 3,
        prev: 1.0,
        curr: 0.5,
        expect_lr: 1e-5,
        expect_epochs: 3,
    },
];

pub fn run_scenarios() -> Vec<String> {
    let mut failures = Vec::new();
    for s in SCENARIOS {
        let mut sched = LrSchedule::default();
        sched.lr = s.lr;
        sched.epochs_at_lr = s.epochs_at_lr;
        let lr = sched.update(s.prev, s.curr);
        if (lr - s.expect_lr).abs() > 1e-15 || sched.epochs_at_lr != s.expect_epochs {
            failures.push(format!(
                "{}: lr {lr}, epochs {}",
                s.name, sched.epochs_at_lr
            ));
        }
    }
    failures
}
