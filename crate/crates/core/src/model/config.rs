use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attention {
    /// Shared-weight self-attention.
    Swsa,
    /// Mean over time.
    Average,
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Input frames per utterance.
    pub frames: usize,
    /// MFCC coefficients per frame.
    pub features: usize,
    pub channels: usize,
    pub num_blocks: usize,
    pub bgru_hidden: usize,
    pub attention: Attention,
    pub heads: usize,
    pub fc_out: usize,
    pub num_classes: usize,
    /// Frame of the BGRU output that forms the attention query (0-based).
    pub query_index: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            frames: 99,
            features: 40,
            channels: 40,
            num_blocks: 6,
            bgru_hidden: 20,
            attention: Attention::Swsa,
            heads: 4,
            fc_out: 20,
            num_classes: 11,
            query_index: 49,
        }
    }
}

/// Dilation of every separable conv layer. Overall CNN layer `i` (the
/// frequency-collapsing conv is layer 1) uses `2^⌊(i−1)/3⌋`.
pub fn dilation_schedule(num_blocks: usize) -> Vec<usize> {
    (2..=1 + 2 * num_blocks)
        .map(|i| 1 << ((i - 1) / 3))
        .collect()
}

impl ModelConfig {
    pub fn base() -> Self {
        Self::default()
    }

    pub fn narrow() -> Self {
        Self {
            channels: 20,
            bgru_hidden: 10,
            ..Self::default()
        }
    }

    pub fn avg() -> Self {
        Self {
            attention: Attention::Average,
            ..Self::default()
        }
    }

    /// Width of each BGRU output frame.
    pub fn sequence_width(&self) -> usize {
        2 * self.bgru_hidden
    }

    pub fn dilations(&self) -> Vec<usize> {
        dilation_schedule(self.num_blocks)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        let positive = [
            ("frames", self.frames),
            ("features", self.features),
            ("channels", self.channels),
            ("num_blocks", self.num_blocks),
            ("bgru_hidden", self.bgru_hidden),
            ("fc_out", self.fc_out),
            ("num_classes", self.num_classes),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return fail(format!("{name} must be at least 1"));
        }
        if self.attention == Attention::Swsa {
            if self.heads == 0 || !self.sequence_width().is_multiple_of(self.heads) {
                return fail(format!(
                    "{} heads do not divide the BGRU output width {}",
                    self.heads,
                    self.sequence_width()
                ));
            }
            if self.query_index >= self.frames {
                return fail(format!(
                    "query index {} outside {} frames",
                    self.query_index, self.frames
                ));
            }
        }
        Ok(())
    }
}

/// Named configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Base,
    Narrow,
    Avg,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Base, Variant::Narrow, Variant::Avg];

    pub fn config(self) -> ModelConfig {
        match self {
            Variant::Base => ModelConfig::base(),
            Variant::Narrow => ModelConfig::narrow(),
            Variant::Avg => ModelConfig::avg(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::Narrow => "narrow",
            Variant::Avg => "avg",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown variant {s:?} (expected base, narrow or avg)"
                ))
            })
    }
}
