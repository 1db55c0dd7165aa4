//! Small-footprint keyword spotting with separable temporal convolutions,
//! a bidirectional GRU and shared-weight self-attention.
//!
//! The pipeline runs MFCC extraction ([`frontend`]), the network
//! ([`layers`], [`model`]), training ([`trainer`]) and evaluation
//! ([`eval`]) over the Speech Commands layout ([`dataset`]). [`model::footprint`]
//! reports parameter and multiplier counts per layer.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod frontend;
pub mod layers;
pub mod model;
pub mod numerics;
pub mod trainer;

pub use error::{Error, Result};
pub use frontend::{FeatureMatrix, Waveform};
pub use model::{footprint, receptive_field, FootprintReport, ModelConfig, StConvModel, Variant};

pub use numerics::Tensor;
