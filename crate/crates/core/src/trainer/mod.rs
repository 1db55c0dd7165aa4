//! Mini-batch training: cross-entropy, Adam, dev-loss learning-rate decay and
//! best-on-dev checkpoint selection.

mod adam;
mod loss;
mod schedule;
mod train;

pub use adam::Adam;
pub use loss::{cross_entropy, LOG_FLOOR};
pub use schedule::LrSchedule;
pub use train::{evaluate, train, EpochLog, Evaluation, TrainConfig, TrainOutcome};
