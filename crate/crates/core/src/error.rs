use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the keyword-spotting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("malformed WAV: {0}")]
    MalformedWav(&'static str),
    #[error("unsupported WAV sample rate {0} Hz (expected 16000)")]
    UnsupportedSampleRate(u32),
    #[error(
        "unsupported WAV encoding: format tag {format_tag}, {bits_per_sample} bits per sample"
    )]
    UnsupportedWavFormat {
        format_tag: u16,
        bits_per_sample: u16,
    },
    #[error("unsupported WAV channel count {0} (expected mono)")]
    UnsupportedChannels(u16),

    #[error("invalid feature cache file: {0}")]
    FeatureCache(String),

    #[error("invalid layer argument: {0}")]
    InvalidArgument(String),
    #[error("backward called on {0} without a cached forward pass")]
    MissingForwardCache(&'static str),

    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("weight file format error: {0}")]
    WeightFormat(String),
    #[error("weight file version {found} is not supported (expected {expected})")]
    WeightVersion { found: u32, expected: u32 },
    #[error("weight file truncated: {0}")]
    Truncated(String),
    #[error("weight tensor {name} has shape {found:?}, config expects {expected:?}")]
    WeightShape {
        name: String,
        found: Vec<usize>,
        expected: Vec<usize>,
    },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("empty {0} split")]
    EmptySplit(&'static str),

    #[error("unknown word {0:?}")]
    UnknownWord(String),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: &[usize], right: &[usize]) -> Self {
        Error::Shape {
            op,
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }

    /// Attach a file path to an error.
    pub fn at(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
