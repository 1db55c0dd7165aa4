//! The ST-Conv network family: configuration, assembly, cost accounting and
//! weight files.

mod config;
mod footprint;
mod network;
mod weights;

pub use config::{dilation_schedule, Attention, ModelConfig, Variant};
pub use footprint::{
    footprint, receptive_field, receptive_field_of, FootprintReport, FootprintRow,
};
pub use network::{Pooling, StConvModel};
pub use weights::{
    load_weights, load_weights_expecting, save_weights, WEIGHT_MAGIC, WEIGHT_VERSION,
};
