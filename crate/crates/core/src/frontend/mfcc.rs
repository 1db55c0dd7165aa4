//! MFCC extraction.
//!
//! Per frame: pre-emphasis (0.97), 400-sample Hamming window, 512-point
//! magnitude FFT, 40 triangular mel filters over 20–7600 Hz, natural log
//! floored at 1e-10, orthonormal DCT-II keeping all 40 coefficients.
//!
//! A 16000-sample clip framed at 400/160 only yields 98 full frames, so the
//! clip is zero-padded to 16080 samples to produce exactly 99.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::wav::{Waveform, SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct MfccConfig {
    pub sample_rate: u32,
    pub frame_length: usize,
    pub frame_shift: usize,
    pub num_frames: usize,
    pub fft_size: usize,
    pub num_filters: usize,
    pub num_coefficients: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    pub pre_emphasis: f64,
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            sample_rate: SAMPLE_RATE,
            frame_length: 400,
            frame_shift: 160,
            num_frames: 99,
            fft_size: 512,
            num_filters: 40,
            num_coefficients: 40,
            low_hz: 20.0,
            high_hz: 7600.0,
            pre_emphasis: 0.97,
            log_floor: 1e-10,
        }
    }
}

/// The network input: 99 frames of 40 MFCCs.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(Tensor);

impl FeatureMatrix {
    pub fn new(frames: Tensor) -> Result<Self> {
        if frames.rank() != 2 {
            return Err(Error::InvalidTensor(format!(
                "feature matrix must be 2-D, got {:?}",
                frames.shape()
            )));
        }
        Ok(Self(frames))
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor {
        self.0
    }

    pub fn frames(&self) -> usize {
        self.0.shape()[0]
    }

    pub fn coefficients(&self) -> usize {
        self.0.shape()[1]
    }

    /// Round every value through `f32`, the precision of the feature cache.
    pub fn to_f32_precision(&self) -> Self {
        Self(self.0.map(|v| f64::from(v as f32)))
    }
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Precomputed MFCC pipeline (window, filterbank, DCT basis and FFT plan).
pub struct Mfcc {
    config: MfccConfig,
    window: Vec<f64>,
    /// `[num_filters × (fft_size/2 + 1)]`
    filterbank: Vec<f64>,
    /// `[num_coefficients × num_filters]`
    dct: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Mfcc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Mfcc")
            .field("config", &self.config)
            .finish()
    }
}

impl Mfcc {
    pub fn new(config: MfccConfig) -> Result<Self> {
        if config.frame_length > config.fft_size {
            return Err(Error::InvalidArgument(
                "frame length exceeds FFT size".into(),
            ));
        }
        if config.num_coefficients > config.num_filters {
            return Err(Error::InvalidArgument(
                "more cepstral coefficients than filters".into(),
            ));
        }
        let n = config.frame_length;
        let window = (0..n)
            .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
            .collect();
        let filterbank = Self::mel_filterbank(&config);
        let dct = Self::dct_basis(config.num_coefficients, config.num_filters);
        let fft = FftPlanner::new().plan_fft_forward(config.fft_size);
        Ok(Self {
            config,
            window,
            filterbank,
            dct,
            fft,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.config
    }

    fn num_bins(config: &MfccConfig) -> usize {
        config.fft_size / 2 + 1
    }

    fn mel_filterbank(config: &MfccConfig) -> Vec<f64> {
        let bins = Self::num_bins(config);
        let lo = hz_to_mel(config.low_hz);
        let hi = hz_to_mel(config.high_hz);
        let edges: Vec<f64> = (0..config.num_filters + 2)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (config.num_filters + 1) as f64))
            .collect();
        let bin_hz = f64::from(config.sample_rate) / config.fft_size as f64;
        let mut fb = vec![0.0; config.num_filters * bins];
        for m in 0..config.num_filters {
            let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
            for k in 0..bins {
                let f = k as f64 * bin_hz;
                let rising = (f - left) / (center - left);
                let falling = (right - f) / (right - center);
                fb[m * bins + k] = rising.min(falling).max(0.0);
            }
        }
        fb
    }

    /// Orthonormal DCT-II basis, `[rows × n]`.
    pub fn dct_basis(rows: usize, n: usize) -> Vec<f64> {
        let mut basis = vec![0.0; rows * n];
        for k in 0..rows {
            let scale = if k == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            for i in 0..n {
                basis[k * n + i] =
                    scale * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos();
            }
        }
        basis
    }

    /// Pre-emphasized signal, zero-padded to cover every frame.
    fn emphasized(&self, w: &Waveform) -> Vec<f64> {
        let c = &self.config;
        let x = w.samples();
        let needed = (c.num_frames - 1) * c.frame_shift + c.frame_length;
        let mut y = vec![0.0; needed.max(x.len())];
        for (i, &s) in x.iter().enumerate() {
            y[i] = if i == 0 {
                s
            } else {
                s - c.pre_emphasis * x[i - 1]
            };
        }
        y
    }

    /// Log mel-filterbank energies, `[num_frames × num_filters]`, before the DCT.
    pub fn log_mel_energies(&self, w: &Waveform) -> Result<Tensor> {
        let c = &self.config;
        if w.sample_rate() != c.sample_rate {
            return Err(Error::UnsupportedSampleRate(w.sample_rate()));
        }
        let signal = self.emphasized(w);
        let bins = Self::num_bins(c);
        let mut buf = vec![Complex::new(0.0, 0.0); c.fft_size];
        let mut magnitude = vec![0.0; bins];
        let mut out = Tensor::zeros(&[c.num_frames, c.num_filters]);
        for frame in 0..c.num_frames {
            let start = frame * c.frame_shift;
            buf.iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0));
            for (i, z) in buf.iter_mut().take(c.frame_length).enumerate() {
                z.re = signal[start + i] * self.window[i];
            }
            self.fft.process(&mut buf);
            magnitude
                .iter_mut()
                .zip(&buf)
                .for_each(|(m, z)| *m = z.norm());
            let row = out.row_mut(frame);
            for (m, energy) in row.iter_mut().enumerate() {
                let e: f64 = self.filterbank[m * bins..(m + 1) * bins]
                    .iter()
                    .zip(&magnitude)
                    .map(|(wt, mag)| wt * mag)
                    .sum();
                *energy = e.max(c.log_floor).ln();
            }
        }
        Ok(out)
    }

    pub fn compute(&self, w: &Waveform) -> Result<FeatureMatrix> {
        let c = &self.config;
        let log_mel = self.log_mel_energies(w)?;
        let mut out = Tensor::zeros(&[c.num_frames, c.num_coefficients]);
        for frame in 0..c.num_frames {
            let energies = log_mel.row(frame);
            let row = out.row_mut(frame);
            for (k, coeff) in row.iter_mut().enumerate() {
                *coeff = self.dct[k * c.num_filters..(k + 1) * c.num_filters]
                    .iter()
                    .zip(energies)
                    .map(|(b, e)| b * e)
                    .sum();
            }
        }
        FeatureMatrix::new(out)
    }
}

/// MFCC features with the default configuration.
pub fn mfcc(w: &Waveform) -> Result<FeatureMatrix> {
    static DEFAULT: OnceLock<Mfcc> = OnceLock::new();
    DEFAULT
        .get_or_init(|| Mfcc::new(MfccConfig::default()).expect("default MFCC config is valid"))
        .compute(w)
}
