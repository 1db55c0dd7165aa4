/// Learning-rate decay driven by dev loss.
///
/// At each epoch end: once the current rate has been held for at least
/// `min_epochs` epochs, a dev loss that fails to drop by `threshold`
/// (relative) against the previous epoch multiplies the rate by `factor`,
/// clamped at `floor`.
#[derive(Debug, Clone, PartialEq)]
pub struct LrSchedule {
    pub lr: f64,
    pub factor: f64,
    pub floor: f64,
    pub threshold: f64,
    pub min_epochs: usize,
    /// Completed epochs at the current rate.
    pub epochs_at_lr: usize,
    pub previous_loss: Option<f64>,
}

impl LrSchedule {
    pub fn new(lr: f64, factor: f64, floor: f64, threshold: f64, min_epochs: usize) -> Self {
        assert!(
            factor > 0.0 && factor < 1.0,
            "decay factor must be in (0, 1)"
        );
        assert!(floor > 0.0, "learning-rate floor must be positive");
        Self {
            lr: lr.max(floor),
            factor,
            floor,
            threshold,
            min_epochs,
            epochs_at_lr: 0,
            previous_loss: None,
        }
    }

    /// One decision given the previous and current dev losses; returns the new rate.
    pub fn update(&mut self, previous: f64, current: f64) -> f64 {
        if self.epochs_at_lr >= self.min_epochs && current >= previous * (1.0 - self.threshold) {
            self.lr = (self.lr * self.factor).max(self.floor);
            self.epochs_at_lr = 0;
        }
        self.lr
    }

    /// Record a finished epoch and its dev loss; returns the rate for the next epoch.
    pub fn end_epoch(&mut self, dev_loss: f64) -> f64 {
        self.epochs_at_lr += 1;
        if let Some(previous) = self.previous_loss {
            self.update(previous, dev_loss);
        }
        self.previous_loss = Some(dev_loss);
        self.lr
    }
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self::new(1e-3, 0.6, 1e-5, 0.03, 2)
    }
}
