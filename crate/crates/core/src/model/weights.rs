//! Weight files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! 0   8 bytes   magic "STCONVWT"
//! 8   u32       format version
//! 12  u32       tensor count
//! 16  u32 + N   config record (UTF-8 JSON)
//!     u32 + M   manifest (UTF-8 JSON list of {name, shape, offset})
//!     ...       tensor blobs as f32, offsets relative to the end of the manifest
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::network::StConvModel;
use crate::error::{Error, Result};

pub const WEIGHT_MAGIC: &[u8; 8] = b"STCONVWT";
pub const WEIGHT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

pub(crate) fn to_bytes(model: &StConvModel) -> Result<Vec<u8>> {
    let tensors = model.named_tensors();
    let config = serde_json::to_vec(model.config())?;
    let mut offset = 0;
    let manifest: Vec<ManifestEntry> = tensors
        .iter()
        .map(|(name, t)| {
            let entry = ManifestEntry {
                name: name.clone(),
                shape: t.shape().to_vec(),
                offset,
            };
            offset += 4 * t.len();
            entry
        })
        .collect();
    let manifest = serde_json::to_vec(&manifest)?;

    let mut out = Vec::with_capacity(28 + config.len() + manifest.len() + offset);
    out.extend_from_slice(WEIGHT_MAGIC);
    out.extend_from_slice(&WEIGHT_VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(&config);
    out.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
    out.extend_from_slice(&manifest);
    for (_, t) in &tensors {
        for v in t.to_f32_vec() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Truncated(format!("while reading {what}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

/// Decode a weight file. When `expected` is given, the stored tensors must
/// have the shapes that config produces.
pub(crate) fn from_bytes(bytes: &[u8], expected: Option<&ModelConfig>) -> Result<StConvModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8, "magic").ok() != Some(&WEIGHT_MAGIC[..]) {
        return Err(Error::WeightFormat("bad magic".into()));
    }
    let version = r.u32("version")?;
    if version != WEIGHT_VERSION {
        return Err(Error::WeightVersion {
            found: version,
            expected: WEIGHT_VERSION,
        });
    }
    let count = r.u32("tensor count")? as usize;
    let config_len = r.u32("config length")? as usize;
    let stored: ModelConfig = serde_json::from_slice(r.take(config_len, "config")?)
        .map_err(|e| Error::WeightFormat(format!("config record: {e}")))?;
    let manifest_len = r.u32("manifest length")? as usize;
    let manifest: Vec<ManifestEntry> = serde_json::from_slice(r.take(manifest_len, "manifest")?)
        .map_err(|e| Error::WeightFormat(format!("manifest: {e}")))?;
    if manifest.len() != count {
        return Err(Error::WeightFormat(format!(
            "header lists {count} tensors, manifest {}",
            manifest.len()
        )));
    }
    let data = &bytes[r.pos..];

    let config = expected.unwrap_or(&stored);
    let mut model = StConvModel::build(config, 0)?;
    let names: Vec<String> = model.named_tensors().into_iter().map(|(n, _)| n).collect();
    let targets = model.tensors_mut();
    if targets.len() != manifest.len() {
        return Err(Error::WeightFormat(format!(
            "config expects {} tensors, file has {}",
            targets.len(),
            manifest.len()
        )));
    }
    for ((target, name), entry) in targets.into_iter().zip(&names).zip(&manifest) {
        if &entry.name != name {
            return Err(Error::WeightFormat(format!(
                "expected tensor {name}, found {}",
                entry.name
            )));
        }
        if entry.shape != target.shape() {
            return Err(Error::WeightShape {
                name: name.clone(),
                found: entry.shape.clone(),
                expected: target.shape().to_vec(),
            });
        }
        let len = 4 * target.len();
        let blob = data
            .get(entry.offset..entry.offset + len)
            .ok_or_else(|| Error::Truncated(format!("tensor {name}")))?;
        for (dst, chunk) in target.data_mut().iter_mut().zip(blob.chunks_exact(4)) {
            *dst = f64::from(f32::from_le_bytes(chunk.try_into().unwrap()));
        }
    }
    Ok(model)
}

pub fn save_weights(model: &StConvModel, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::from(e).at(parent))?;
    }
    fs::write(path, to_bytes(model)?).map_err(|e| Error::from(e).at(path))
}

/// Load a model using the config recorded in the file.
pub fn load_weights(path: &Path) -> Result<StConvModel> {
    let bytes = fs::read(path).map_err(|e| Error::from(e).at(path))?;
    from_bytes(&bytes, None)
}

/// Load a model, requiring the file's tensors to fit `config`.
pub fn load_weights_expecting(path: &Path, config: &ModelConfig) -> Result<StConvModel> {
    let bytes = fs::read(path).map_err(|e| Error::from(e).at(path))?;
    from_bytes(&bytes, Some(config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variant;

    #[test]
    fn header_layout() {
        let model = StConvModel::build(&ModelConfig::narrow(), 1).unwrap();
        let bytes = to_bytes(&model).unwrap();
        assert_eq!(&bytes[..8], b"STCONVWT");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        let count = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        assert_eq!(count, model.named_tensors().len());
    }

    #[test]
    fn same_seed_same_bytes() {
        for v in Variant::ALL {
            let a = to_bytes(&StConvModel::build(&v.config(), 42).unwrap()).unwrap();
            let b = to_bytes(&StConvModel::build(&v.config(), 42).unwrap()).unwrap();
            assert_eq!(a, b);
            let c = to_bytes(&StConvModel::build(&v.config(), 43).unwrap()).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn error_paths() {
        let model = StConvModel::build(&ModelConfig::narrow(), 1).unwrap();
        let bytes = to_bytes(&model).unwrap();

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            from_bytes(&bad_magic, None),
            Err(Error::WeightFormat(_))
        ));

        let mut bad_version = bytes.clone();
        bad_version[8] = 9;
        assert!(matches!(
            from_bytes(&bad_version, None),
            Err(Error::WeightVersion { found: 9, .. })
        ));

        let short = &bytes[..bytes.len() - 4];
        assert!(matches!(from_bytes(short, None), Err(Error::Truncated(_))));
        assert!(matches!(
            from_bytes(&bytes[..20], None),
            Err(Error::Truncated(_))
        ));

        let wrong_classes = ModelConfig {
            num_classes: 12,
            ..ModelConfig::narrow()
        };
        assert!(matches!(
            from_bytes(&bytes, Some(&wrong_classes)),
            Err(Error::WeightShape { .. })
        ));
    }
}
