//! Deterministic harmonic-plus-noise note synthesizer.
//!
//! Each note is a sum of up to twelve harmonics whose geometric amplitude
//! decay is solved numerically so the harmonic centroid equals the
//! denormalized brightness target. The amplitude envelope is a tent in the
//! dB domain with its apex at the peak-position target: sweeping a line
//! between two dB levels spends equal time at every level, so the frame-dB
//! curve is uniformly distributed, its standard deviation is `depth /
//! sqrt(12)`, and the fluctuation target pins the depth directly. After
//! assembly the note is re-measured with the extractor's own framing and a
//! single gain sets the mean frame dB exactly on the volume target — the
//! loop that makes rendered audio invert back to its parameters.
//!
//! A fixed per-note linear-congruential noise floor at -60 dB adds bow
//! texture without disturbing measurements; identical inputs produce
//! bit-identical samples.

use serde::{Deserialize, Serialize};

use crate::audio::{AudioBuffer, SAMPLE_RATE};
use crate::expression::RenderParams;
use crate::features::{frame_count, frame_db, HOP_S, WINDOW_S};
use crate::score::Score;
use crate::{Error, Result};

/// Shortest note the synthesizer renders, seconds.
pub const MIN_NOTE_S: f64 = 0.05;
/// Raised-cosine fade at both note ends, seconds.
const FADE_S: f64 = 0.005;
/// Noise floor relative to the harmonic peak, linear (-60 dB).
const NOISE_REL: f64 = 0.001;
/// Buffer tail after the final offset, seconds.
const RELEASE_TAIL_S: f64 = 0.1;

/// Physical ranges realizing the normalized [0, 1] controls.
///
/// The same table must be used by the synthesizer and by any round-trip
/// check; it is persisted inside the expression model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenormTable {
    /// Mean frame level range, dB.
    pub volume_db: (f64, f64),
    /// Frame-level standard deviation range, dB.
    pub fluctuation_db: (f64, f64),
    /// Vibrato rate range, Hz.
    pub vibrato_hz: (f64, f64),
    /// Normalized vibrato below this renders no vibrato at all.
    pub vibrato_gate: f64,
    /// Fixed vibrato depth, cents.
    pub vibrato_depth_cents: f64,
    /// Harmonic-centroid range, harmonic-index units.
    pub brightness_centroid: (f64, f64),
    /// Attack rise-time range, seconds. A higher attack control means a
    /// sharper onset, i.e. a shorter rise.
    pub attack_s: (f64, f64),
}

impl Default for DenormTable {
    fn default() -> Self {
        DenormTable {
            volume_db: (-60.0, -6.0),
            fluctuation_db: (0.0, 6.0),
            vibrato_hz: (4.0, 8.0),
            vibrato_gate: 0.05,
            vibrato_depth_cents: 20.0,
            brightness_centroid: (1.0, 4.0),
            attack_s: (0.01, 0.15),
        }
    }
}

fn lerp(range: (f64, f64), x: f64) -> f64 {
    range.0 + (range.1 - range.0) * x
}

impl DenormTable {
    pub fn validate(&self) -> Result<()> {
        for (name, range) in [
            ("volume_db", self.volume_db),
            ("fluctuation_db", self.fluctuation_db),
            ("vibrato_hz", self.vibrato_hz),
            ("brightness_centroid", self.brightness_centroid),
            ("attack_s", self.attack_s),
        ] {
            if !range.0.is_finite() || !range.1.is_finite() || range.0 >= range.1 {
                return Err(Error::Model(format!("denorm {name}: range {range:?} not ordered")));
            }
        }
        if !(0.0..1.0).contains(&self.vibrato_gate) || self.vibrato_depth_cents < 0.0 {
            return Err(Error::Model("denorm vibrato gate/depth invalid".into()));
        }
        Ok(())
    }

    pub fn volume_db(&self, x: f64) -> f64 {
        lerp(self.volume_db, x)
    }

    pub fn fluctuation_db(&self, x: f64) -> f64 {
        lerp(self.fluctuation_db, x)
    }

    /// 0 below the gate, otherwise the rate inside the vibrato range.
    pub fn vibrato_hz(&self, x: f64) -> f64 {
        if x < self.vibrato_gate {
            0.0
        } else {
            lerp(self.vibrato_hz, x)
        }
    }

    pub fn brightness_centroid(&self, x: f64) -> f64 {
        lerp(self.brightness_centroid, x)
    }

    /// Rise time in seconds; monotone decreasing in the attack control.
    pub fn attack_time(&self, x: f64) -> f64 {
        lerp((self.attack_s.1, self.attack_s.0), x)
    }
}

/// Centroid of the geometric harmonic family `a_h = r^(h-1)`.
fn centroid_of_decay(r: f64, harmonics: usize) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut w = 1.0;
    for h in 1..=harmonics {
        num += h as f64 * w;
        den += w;
        w *= r;
    }
    num / den
}

/// Solve the decay ratio whose centroid matches the target by bisection
/// (the centroid is strictly increasing in `r`).
fn solve_decay(target: f64, harmonics: usize) -> f64 {
    if harmonics <= 1 {
        return 0.0;
    }
    let (mut lo, mut hi) = (1e-9, 16.0);
    let target = target.clamp(1.0, centroid_of_decay(hi, harmonics));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let c = centroid_of_decay(mid, harmonics);
        if (c - target).abs() < 1e-6 {
            return mid;
        }
        if c < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// dB tent: 0 at the apex `t_p`, `-depth` at both note ends.
fn tent_db(t: f64, t_peak: f64, duration: f64, depth: f64) -> f64 {
    if t <= t_peak {
        if t_peak > 0.0 {
            -depth * (t_peak - t) / t_peak
        } else {
            0.0
        }
    } else if duration > t_peak {
        -depth * (t - t_peak) / (duration - t_peak)
    } else {
        0.0
    }
}

fn raised_cosine(x: f64) -> f64 {
    0.5 - 0.5 * (std::f64::consts::PI * x.clamp(0.0, 1.0)).cos()
}

fn db_to_amp(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

struct NoiseLcg(u64);

impl NoiseLcg {
    fn for_note(pitch: u8, samples: usize) -> Self {
        NoiseLcg(0x9E37_79B9_7F4A_7C15u64 ^ (u64::from(pitch) << 32) ^ samples as u64)
    }

    /// Uniform in [-1, 1].
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64 / (1u64 << 52) as f64) - 1.0
    }
}

/// Synthesize one note. `duration` is the sounding length in seconds.
pub fn synth_note(
    pitch: u8,
    duration: f64,
    params: &RenderParams,
    table: &DenormTable,
    sample_rate: u32,
) -> Result<Vec<f64>> {
    if pitch > 127 {
        return Err(Error::Synth(format!("pitch {pitch} outside 0-127")));
    }
    if duration < MIN_NOTE_S {
        return Err(Error::Synth(format!("duration {duration:.4} s below the {MIN_NOTE_S} s minimum")));
    }
    debug_assert!(
        [params.volume, params.fluctuation, params.peak_position, params.vibrato, params.brightness, params.attack]
            .iter()
            .all(|v| (0.0..=1.0).contains(v)),
        "render controls live on [0, 1]"
    );

    let sr = f64::from(sample_rate);
    let n = (duration * sr).round() as usize;
    let f0 = 440.0 * ((f64::from(pitch) - 69.0) / 12.0).exp2();

    let target_volume_db = table.volume_db(params.volume.clamp(0.0, 1.0));
    let depth_db = table.fluctuation_db(params.fluctuation.clamp(0.0, 1.0)) * 12.0f64.sqrt();
    let t_peak = params.peak_position.clamp(0.0, 1.0) * duration;
    let vibrato_hz = table.vibrato_hz(params.vibrato.clamp(0.0, 1.0));
    let centroid = table.brightness_centroid(params.brightness.clamp(0.0, 1.0));
    let attack_time = table.attack_time(params.attack.clamp(0.0, 1.0));

    // Harmonic amplitudes: geometric decay matched to the centroid target,
    // normalized to unit amplitude sum.
    let nyquist = sr / 2.0;
    let harmonics = ((nyquist / f0).ceil() as usize).saturating_sub(1).min(12);
    let amps: Vec<f64> = if harmonics >= 1 {
        let r = solve_decay(centroid, harmonics);
        let mut raw: Vec<f64> = (0..harmonics).map(|h| r.powi(h as i32)).collect();
        let sum: f64 = raw.iter().sum();
        for a in &mut raw {
            *a /= sum;
        }
        raw
    } else {
        Vec::new()
    };

    let vibrato_scale = table.vibrato_depth_cents / 1200.0;
    let mut noise = NoiseLcg::for_note(pitch, n);
    let mut phase = 0.0f64;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / sr;
        let f = if vibrato_hz > 0.0 {
            f0 * (vibrato_scale * (2.0 * std::f64::consts::PI * vibrato_hz * t).sin()).exp2()
        } else {
            f0
        };
        phase += 2.0 * std::f64::consts::PI * f / sr;

        let mut s = 0.0;
        for (h, &a) in amps.iter().enumerate() {
            s += a * ((h + 1) as f64 * phase).sin();
        }
        s += NOISE_REL * noise.next();

        let mut env = db_to_amp(tent_db(t, t_peak, duration, depth_db));
        if attack_time > 0.0 && t < attack_time {
            env *= raised_cosine(t / attack_time);
        }
        if t < FADE_S {
            env *= raised_cosine(t / FADE_S);
        }
        let t_left = duration - t;
        if t_left < FADE_S {
            env *= raised_cosine(t_left / FADE_S);
        }
        samples.push(s * env);
    }

    // One gain correction pins the mean frame dB on the volume target,
    // measured exactly as the extractor will measure it.
    let window = (WINDOW_S * sr).round() as usize;
    let hop = (HOP_S * sr).round() as usize;
    let measured = if frame_count(samples.len(), window, hop) >= 1 {
        let db = frame_db(&samples, window, hop);
        db.iter().sum::<f64>() / db.len() as f64
    } else {
        let rms = (samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64).sqrt();
        20.0 * rms.max(1e-9).log10()
    };
    let gain = db_to_amp(target_volume_db - measured);
    for s in &mut samples {
        *s *= gain;
    }
    Ok(samples)
}

/// Render a timing-rewritten score with one parameter set per note into a
/// mono buffer at 16 kHz, peak-normalizing to 0.9 only if a sample would
/// clip. Notes shorter than [`MIN_NOTE_S`] sound for the minimum length.
pub fn render_audio(score: &Score, params: &[RenderParams], table: &DenormTable) -> Result<AudioBuffer> {
    let notes = score.notes();
    if notes.is_empty() {
        return Err(Error::Synth("empty score".into()));
    }
    if params.len() != notes.len() {
        return Err(Error::Synth(format!(
            "{} parameter sets for {} notes",
            params.len(),
            notes.len()
        )));
    }

    let sr = f64::from(SAMPLE_RATE);
    let end = notes
        .iter()
        .map(|n| n.onset + n.duration().max(MIN_NOTE_S))
        .fold(0.0, f64::max);
    let len = ((end + RELEASE_TAIL_S) * sr).round() as usize;
    let mut mix = vec![0.0f64; len];

    for (note, p) in notes.iter().zip(params) {
        let rendered = synth_note(note.pitch, note.duration().max(MIN_NOTE_S), p, table, SAMPLE_RATE)?;
        let start = (note.onset * sr).round() as usize;
        for (i, s) in rendered.into_iter().enumerate() {
            if let Some(slot) = mix.get_mut(start + i) {
                *slot += s;
            }
        }
    }

    let peak = mix.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 1.0 {
        let scale = 0.9 / peak;
        for s in &mut mix {
            *s *= scale;
        }
    }
    AudioBuffer::new(mix, SAMPLE_RATE)
}
