//! Parameter and multiplier accounting.
//!
//! Counting conventions:
//! - parameters are weight-matrix entries only; conv layers are bias-free and
//!   batch-norm scale/shift plus dense biases are reported separately. BGRU
//!   gate biases are counted with the BGRU.
//! - convolutions count kernel multiplies per output element: `T·F·C` for the
//!   first layer, `T·(3C + C²)` per separable layer.
//! - BGRU counts `3·(d·h + h² + h)` per frame per direction.
//! - SWSA counts the projection of every frame (`T·D²`), the separate query
//!   projection (`D²`), the score dot products (`T·D`) and the weighted sum
//!   (`T·D`).
//! - FC and the output layer count one vector-matrix multiply.
//! - average pooling has neither parameters nor multipliers.

use std::fmt;

use serde::Serialize;

use super::config::{Attention, ModelConfig};
use crate::layers::KERNEL_TIME;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FootprintRow {
    pub name: String,
    pub params: u64,
    pub mults: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FootprintReport {
    pub rows: Vec<FootprintRow>,
    pub total_params: u64,
    pub total_mults: u64,
    /// Batch-norm scale and shift, excluded from `total_params`.
    pub batch_norm_params: u64,
    /// Dense-layer biases, excluded from `total_params`.
    pub dense_bias_params: u64,
    pub receptive_field: u64,
}

impl FootprintReport {
    pub fn row(&self, name: &str) -> Option<&FootprintRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Every trainable value in the model, including the excluded ones.
    pub fn trainable_params(&self) -> u64 {
        self.total_params + self.batch_norm_params + self.dense_bias_params
    }
}

pub fn footprint(config: &ModelConfig) -> FootprintReport {
    let t = config.frames as u64;
    let f = config.features as u64;
    let c = config.channels as u64;
    let blocks = config.num_blocks as u64;
    let h = config.bgru_hidden as u64;
    let d = config.sequence_width() as u64;
    let k = KERNEL_TIME as u64;
    let fc = config.fc_out as u64;
    let classes = config.num_classes as u64;

    let row = |name: String, params: u64, mults: u64| FootprintRow {
        name,
        params,
        mults,
    };
    let conv_params = f * c;
    let block_params = 2 * blocks * (k * c + c * c);
    let gru_params = 2 * 3 * (c * h + h * h + h);
    let mut rows = vec![
        row("Conv".into(), conv_params, t * conv_params),
        row(format!("Block*{blocks}"), block_params, t * block_params),
        row("BGRU".into(), gru_params, t * gru_params),
    ];
    rows.push(match config.attention {
        Attention::Swsa => row("SWSA".into(), d * d, t * d * d + d * d + 2 * t * d),
        Attention::Average => row("AvgPool".into(), 0, 0),
    });
    rows.push(row("FC".into(), d * fc, d * fc));
    rows.push(row("Softmax".into(), fc * classes, fc * classes));

    FootprintReport {
        total_params: rows.iter().map(|r| r.params).sum(),
        total_mults: rows.iter().map(|r| r.mults).sum(),
        rows,
        batch_norm_params: 2 * 2 * blocks * c,
        dense_bias_params: fc + classes,
        receptive_field: receptive_field(config),
    }
}

/// Receptive field, in frames, of a stack of `(kernel, dilation)` conv layers.
pub fn receptive_field_of(layers: &[(usize, usize)]) -> u64 {
    1 + layers
        .iter()
        .map(|&(kernel, dilation)| ((kernel - 1) * dilation) as u64)
        .sum::<u64>()
}

/// Receptive field of the conv stack: the 1-frame first layer and every
/// separable layer.
pub fn receptive_field(config: &ModelConfig) -> u64 {
    let layers: Vec<(usize, usize)> = std::iter::once((1, 1))
        .chain(config.dilations().into_iter().map(|d| (KERNEL_TIME, d)))
        .collect();
    receptive_field_of(&layers)
}

fn thousands(v: u64) -> String {
    let s = v.to_string();
    let mut out = String::new();
    for (i, ch) in s.chars().enumerate() {
        if i > 0 && (s.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

impl fmt::Display for FootprintReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10}{:>12}{:>14}", "layer", "params", "mults")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<10}{:>12}{:>14}",
                r.name,
                thousands(r.params),
                thousands(r.mults)
            )?;
        }
        writeln!(
            f,
            "{:<10}{:>12}{:>14}",
            "Total",
            thousands(self.total_params),
            thousands(self.total_mults)
        )?;
        writeln!(
            f,
            "excluded from total: {} batch-norm params, {} dense biases",
            self.batch_norm_params, self.dense_bias_params
        )?;
        write!(f, "receptive field: {} frames", self.receptive_field)
    }
}
