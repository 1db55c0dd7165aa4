use crate::error::{Error, Result};

pub const SAMPLE_RATE: u32 = 16_000;
/// One second of audio at [`SAMPLE_RATE`].
pub const CLIP_SAMPLES: usize = 16_000;

const PCM_FORMAT: u16 = 1;

/// One second of mono 16 kHz audio with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    /// Wrap samples, zero-padding or truncating to exactly one second.
    pub fn new(mut samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate != SAMPLE_RATE {
            return Err(Error::UnsupportedSampleRate(sample_rate));
        }
        samples.resize(CLIP_SAMPLES, 0.0);
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn silence() -> Self {
        Self {
            samples: vec![0.0; CLIP_SAMPLES],
            sample_rate: SAMPLE_RATE,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Decode a RIFF/WAVE file holding 16-bit PCM mono audio at 16 kHz.
pub fn decode_wav(bytes: &[u8]) -> Result<Waveform> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::MalformedWav("missing RIFF/WAVE header"));
    }
    let mut pos = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        // Streaming writers sometimes leave the size unset; clamp to what is present.
        let body_end = body_start.saturating_add(size).min(bytes.len());
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(Error::MalformedWav("fmt chunk too short"));
                }
                fmt = Some((
                    u16_at(body, 0),
                    u16_at(body, 2),
                    u32_at(body, 4),
                    u16_at(body, 14),
                ));
            }
            b"data" => {
                data = Some(body);
                break;
            }
            _ => {}
        }
        pos = body_start.saturating_add(size).saturating_add(size & 1);
    }
    let (format_tag, channels, sample_rate, bits) =
        fmt.ok_or(Error::MalformedWav("missing fmt chunk"))?;
    if format_tag != PCM_FORMAT || bits != 16 {
        return Err(Error::UnsupportedWavFormat {
            format_tag,
            bits_per_sample: bits,
        });
    }
    if channels != 1 {
        return Err(Error::UnsupportedChannels(channels));
    }
    if sample_rate != SAMPLE_RATE {
        return Err(Error::UnsupportedSampleRate(sample_rate));
    }
    let data = data.ok_or(Error::MalformedWav("missing data chunk"))?;
    let samples = data
        .chunks_exact(2)
        .take(CLIP_SAMPLES)
        .map(|c| f64::from(i16::from_le_bytes([c[0], c[1]])) / 32768.0)
        .collect();
    Waveform::new(samples, sample_rate)
}

/// Encode 16-bit mono PCM samples as a canonical 44-byte-header WAV file.
pub fn encode_wav(samples: &[i16], sample_rate: u32) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + samples.len() * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&PCM_FORMAT.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    samples
        .iter()
        .for_each(|s| out.extend_from_slice(&s.to_le_bytes()));
    out
}
