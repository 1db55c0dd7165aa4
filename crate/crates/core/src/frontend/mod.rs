//! Audio frontend: PCM16 WAV decoding and the 99×40 MFCC input features.

mod cache;
mod mfcc;
mod wav;

pub use cache::{
    read_feature_cache, write_feature_cache, FEATURE_CACHE_MAGIC, FEATURE_CACHE_VERSION,
};
pub use mfcc::{mfcc, FeatureMatrix, Mfcc, MfccConfig};
pub use wav::{decode_wav, encode_wav, Waveform, CLIP_SAMPLES, SAMPLE_RATE};
