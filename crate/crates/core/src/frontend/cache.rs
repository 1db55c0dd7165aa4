//! Feature cache files: a 16-byte header (`"STCF"`, version, rows, cols as
//! little-endian `u32`) followed by row-major little-endian `f32` values.

use std::fs;
use std::path::Path;

use super::mfcc::FeatureMatrix;
use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub const FEATURE_CACHE_MAGIC: &[u8; 4] = b"STCF";
pub const FEATURE_CACHE_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

pub(crate) fn encode_features(features: &FeatureMatrix) -> Vec<u8> {
    let t = features.tensor();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * t.len());
    out.extend_from_slice(FEATURE_CACHE_MAGIC);
    out.extend_from_slice(&FEATURE_CACHE_VERSION.to_le_bytes());
    out.extend_from_slice(&(t.shape()[0] as u32).to_le_bytes());
    out.extend_from_slice(&(t.shape()[1] as u32).to_le_bytes());
    for v in t.to_f32_vec() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub(crate) fn decode_features(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::FeatureCache("shorter than header".into()));
    }
    if &bytes[0..4] != FEATURE_CACHE_MAGIC {
        return Err(Error::FeatureCache("bad magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != FEATURE_CACHE_VERSION {
        return Err(Error::FeatureCache(format!(
            "unsupported version {version}"
        )));
    }
    let (rows, cols) = (word(8) as usize, word(12) as usize);
    let body = &bytes[HEADER_LEN..];
    if body.len() != rows * cols * 4 {
        return Err(Error::FeatureCache(format!(
            "expected {} payload bytes for {rows}x{cols}, found {}",
            rows * cols * 4,
            body.len()
        )));
    }
    let values: Vec<f32> = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FeatureMatrix::new(Tensor::from_f32(vec![rows, cols], &values)?)
}

pub fn write_feature_cache(path: &Path, features: &FeatureMatrix) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::from(e).at(parent))?;
    }
    fs::write(path, encode_features(features)).map_err(|e| Error::from(e).at(path))
}

pub fn read_feature_cache(path: &Path) -> Result<FeatureMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::from(e).at(path))?;
    decode_features(&bytes).map_err(|e| e.at(path))
}
