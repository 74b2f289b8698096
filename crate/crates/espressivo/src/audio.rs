//! Mono audio buffers and RIFF/WAVE PCM16 I/O.

use crate::{Error, Result};

/// Operating sample rate of the whole pipeline, in Hz.
pub const SAMPLE_RATE: u32 = 16_000;

/// Mono sample buffer at the fixed 16 kHz pipeline rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    /// Wrap samples, enforcing non-emptiness, `|s| <= 1`, and the fixed rate.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate != SAMPLE_RATE {
            return Err(Error::Wav(format!(
                "buffers run at {SAMPLE_RATE} Hz, got {sample_rate}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::Wav("empty audio buffer".into()));
        }
        if let Some(bad) = samples.iter().find(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(Error::Wav(format!("sample {bad} outside [-1, 1]")));
        }
        Ok(AudioBuffer { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}

/// Serialize as a 44-byte-header RIFF/WAVE file: PCM, 16-bit little-endian,
/// mono, 16 kHz.
pub fn write_wav(audio: &AudioBuffer) -> Vec<u8> {
    let n = audio.samples.len() as u32;
    let data_len = n * 2;
    let byte_rate = audio.sample_rate * 2;

    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&audio.sample_rate.to_le_bytes());
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &audio.samples {
        let q = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

/// Parse a RIFF/WAVE file. Only PCM 16-bit mono is accepted; rates other
/// than 16 kHz are linearly resampled with a warning.
pub fn read_wav(bytes: &[u8]) -> Result<AudioBuffer> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Wav("not a RIFF/WAVE file".into()));
    }

    let mut pos = 12;
    let mut format: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let len = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_end = pos + 8 + len;
        if body_end > bytes.len() {
            return Err(Error::Wav(format!("chunk {} overruns file", String::from_utf8_lossy(id))));
        }
        let body = &bytes[pos + 8..body_end];
        match id {
            b"fmt " => {
                if len < 16 {
                    return Err(Error::Wav("fmt chunk too short".into()));
                }
                let audio_format = u16::from_le_bytes(body[0..2].try_into().unwrap());
                let channels = u16::from_le_bytes(body[2..4].try_into().unwrap());
                let rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
                let bits = u16::from_le_bytes(body[14..16].try_into().unwrap());
                format = Some((audio_format, channels, rate, bits));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // Chunks are word-aligned.
        pos = body_end + (len & 1);
    }

    let (audio_format, channels, rate, bits) = format.ok_or_else(|| Error::Wav("missing fmt chunk".into()))?;
    if audio_format != 1 {
        return Err(Error::Wav(format!("unsupported audio format {audio_format} (want PCM)")));
    }
    if channels != 1 {
        return Err(Error::Wav(format!("unsupported channel count {channels} (want mono)")));
    }
    if bits != 16 {
        return Err(Error::Wav(format!("unsupported bit depth {bits} (want 16)")));
    }
    let data = data.ok_or_else(|| Error::Wav("missing data chunk".into()))?;
    if data.len() % 2 != 0 {
        return Err(Error::Wav("odd data chunk length".into()));
    }

    let mut samples: Vec<f64> = data
        .chunks_exact(2)
        .map(|b| (f64::from(i16::from_le_bytes([b[0], b[1]])) / 32767.0).clamp(-1.0, 1.0))
        .collect();
    if samples.is_empty() {
        return Err(Error::Wav("empty data chunk".into()));
    }
    if rate != SAMPLE_RATE {
        log::warn!("resampling {rate} Hz input to {SAMPLE_RATE} Hz by linear interpolation");
        samples = resample_linear(&samples, rate, SAMPLE_RATE);
    }
    AudioBuffer::new(samples, SAMPLE_RATE)
}

fn resample_linear(samples: &[f64], from: u32, to: u32) -> Vec<f64> {
    let ratio = f64::from(from) / f64::from(to);
    let out_len = ((samples.len() as f64) / ratio).floor().max(1.0) as usize;
    (0..out_len)
        .map(|i| {
            let x = i as f64 * ratio;
            let lo = x.floor() as usize;
            let hi = (lo + 1).min(samples.len() - 1);
            let frac = x - lo as f64;
            samples[lo.min(samples.len() - 1)] * (1.0 - frac) + samples[hi] * frac
        })
        .collect()
}
