//! Note-level feature extraction from aligned score + audio pairs.
//!
//! Timing features come from the score alone:
//!
//! * piece tempo — total length over total beats, in seconds per beat;
//! * normalized IOI — each inter-onset interval divided by its note value
//!   times the piece-level IOI-per-beat base `alpha`;
//! * note coverage — sounding duration over IOI, clipped to
//!   [`COVERAGE_CAP`].
//!
//! Audio features are measured per note on 46 ms frames with a 10 ms hop:
//! mean frame dB (volume), the standard deviation of the frame-dB curve
//! (fluctuation), the normalized argmax position of the curve (peak
//! position), the dominant 3-9 Hz rate of the detrended pitch deviation
//! (vibrato), and the centroid of the harmonic magnitude distribution in
//! harmonic-index units (brightness).

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::score::Score;
use crate::{Error, Result};

/// Analysis window length in seconds.
pub const WINDOW_S: f64 = 0.046;
/// Analysis hop in seconds.
pub const HOP_S: f64 = 0.010;
/// Note coverage is clipped here; overlapping legato can push the raw
/// ratio past 1.
pub const COVERAGE_CAP: f64 = 1.2;
/// dB floor for frame levels (matches the volume normalization floor).
pub const DB_FLOOR: f64 = -80.0;

/// Violin f0 search range, Hz.
const F0_MIN_HZ: f64 = 180.0;
const F0_MAX_HZ: f64 = 2000.0;
/// Frames whose normalized autocorrelation peak falls below this are unvoiced.
const CLARITY_THRESHOLD: f64 = 0.5;
/// Vibrato search band, Hz.
const VIBRATO_BAND_HZ: (f64, f64) = (3.0, 9.0);
/// Pitch deviation must reach this sinusoid-equivalent amplitude (cents)
/// before a vibrato rate is reported.
const VIBRATO_MIN_CENTS: f64 = 10.0;
/// Most harmonics considered for the brightness centroid.
const MAX_HARMONICS: usize = 12;

/// Per-note audio features in physical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoteAudioFeatures {
    /// Mean frame level, dB.
    pub volume: f64,
    /// Standard deviation of the frame-level curve, dB.
    pub fluctuation: f64,
    /// Normalized location of the loudest frame, 0-1.
    pub peak_position: f64,
    /// Dominant pitch-modulation rate, Hz (0 when absent).
    pub vibrato: f64,
    /// Harmonic-index centroid, >= 1.
    pub brightness: f64,
}

/// Per-note timing features (dimensionless).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoteTimingFeatures {
    pub normalized_ioi: f64,
    pub coverage: f64,
}

/// Timing and audio features for one note.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoteFeatures {
    #[serde(flatten)]
    pub timing: NoteTimingFeatures,
    #[serde(flatten)]
    pub audio: NoteAudioFeatures,
}

/// Features for a whole recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceFeatures {
    /// Seconds per beat over the whole piece.
    pub tempo: f64,
    /// Piece-level IOI-per-beat base `alpha`, seconds.
    pub ioi_per_beat: f64,
    pub notes: Vec<NoteFeatures>,
}

/// The seven note-level feature dimensions, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoteFeature {
    NormalizedIoi,
    Coverage,
    Volume,
    Fluctuation,
    PeakPosition,
    Vibrato,
    Brightness,
}

impl NoteFeature {
    pub const ALL: [NoteFeature; 7] = [
        NoteFeature::NormalizedIoi,
        NoteFeature::Coverage,
        NoteFeature::Volume,
        NoteFeature::Fluctuation,
        NoteFeature::PeakPosition,
        NoteFeature::Vibrato,
        NoteFeature::Brightness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoteFeature::NormalizedIoi => "normalized_ioi",
            NoteFeature::Coverage => "coverage",
            NoteFeature::Volume => "volume",
            NoteFeature::Fluctuation => "fluctuation",
            NoteFeature::PeakPosition => "peak_position",
            NoteFeature::Vibrato => "vibrato",
            NoteFeature::Brightness => "brightness",
        }
    }
}

impl NoteFeatures {
    pub fn get(&self, f: NoteFeature) -> f64 {
        match f {
            NoteFeature::NormalizedIoi => self.timing.normalized_ioi,
            NoteFeature::Coverage => self.timing.coverage,
            NoteFeature::Volume => self.audio.volume,
            NoteFeature::Fluctuation => self.audio.fluctuation,
            NoteFeature::PeakPosition => self.audio.peak_position,
            NoteFeature::Vibrato => self.audio.vibrato,
            NoteFeature::Brightness => self.audio.brightness,
        }
    }

    pub fn set(&mut self, f: NoteFeature, value: f64) {
        match f {
            NoteFeature::NormalizedIoi => self.timing.normalized_ioi = value,
            NoteFeature::Coverage => self.timing.coverage = value,
            NoteFeature::Volume => self.audio.volume = value,
            NoteFeature::Fluctuation => self.audio.fluctuation = value,
            NoteFeature::PeakPosition => self.audio.peak_position = value,
            NoteFeature::Vibrato => self.audio.vibrato = value,
            NoteFeature::Brightness => self.audio.brightness = value,
        }
    }
}

/// Schema version of the feature document.
pub const FEATURE_DOC_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct FeatureDoc {
    version: u32,
    #[serde(flatten)]
    piece: PieceFeatures,
}

/// Serialize a feature document (versioned JSON).
pub fn save_features(piece: &PieceFeatures) -> String {
    let doc = FeatureDoc {
        version: FEATURE_DOC_VERSION,
        piece: piece.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("feature serialization cannot fail")
}

/// Parse a feature document.
pub fn load_features(text: &str) -> Result<PieceFeatures> {
    let doc: FeatureDoc =
        serde_json::from_str(text).map_err(|e| Error::Feature(format!("bad feature document: {e}")))?;
    if doc.version != FEATURE_DOC_VERSION {
        return Err(Error::Feature(format!("unsupported feature document version {}", doc.version)));
    }
    Ok(doc.piece)
}

/// Piece tempo in seconds per beat: total length over total beats.
pub fn piece_tempo(score: &Score) -> Result<f64> {
    let notes = score.notes();
    if notes.len() < 2 {
        return Err(Error::Feature("piece tempo needs at least two notes".into()));
    }
    let total_beats: f64 = notes.iter().map(|n| n.note_value).sum();
    Ok((notes.last().unwrap().offset - notes[0].onset) / total_beats)
}

/// Inter-onset interval of note `k`. The final note has no successor, so
/// its own sounding duration stands in; its coverage is 1 by construction.
fn iois(score: &Score) -> Vec<f64> {
    let notes = score.notes();
    (0..notes.len())
        .map(|k| match notes.get(k + 1) {
            Some(next) => next.onset - notes[k].onset,
            None => notes[k].offset - notes[k].onset,
        })
        .collect()
}

/// Piece-level IOI-per-beat base: the mean of `IOI_k / note_value_k`.
pub fn ioi_per_beat(score: &Score) -> Result<f64> {
    let notes = score.notes();
    if notes.len() < 2 {
        return Err(Error::Feature("IOI base needs at least two notes".into()));
    }
    let iois = iois(score);
    Ok(iois
        .iter()
        .zip(notes)
        .map(|(ioi, n)| ioi / n.note_value)
        .sum::<f64>()
        / notes.len() as f64)
}

/// Normalized IOI and coverage for every note.
pub fn note_timing_features(score: &Score) -> Result<Vec<NoteTimingFeatures>> {
    let notes = score.notes();
    if notes.len() < 2 {
        return Err(Error::Feature("timing features need at least two notes".into()));
    }
    let iois = iois(score);
    let alpha = ioi_per_beat(score)?;
    Ok(notes
        .iter()
        .zip(&iois)
        .map(|(n, &ioi)| NoteTimingFeatures {
            normalized_ioi: ioi / (n.note_value * alpha),
            coverage: ((n.offset - n.onset) / ioi).min(COVERAGE_CAP),
        })
        .collect())
}

fn window_len(sample_rate: u32, window_s: f64) -> usize {
    (window_s * f64::from(sample_rate)).round() as usize
}

fn hop_len(sample_rate: u32, hop_s: f64) -> usize {
    (hop_s * f64::from(sample_rate)).round().max(1.0) as usize
}

pub(crate) fn frame_count(len: usize, window: usize, hop: usize) -> usize {
    if len < window {
        0
    } else {
        (len - window) / hop + 1
    }
}

/// Frame levels in dB, floored at [`DB_FLOOR`].
pub(crate) fn frame_db(samples: &[f64], window: usize, hop: usize) -> Vec<f64> {
    (0..frame_count(samples.len(), window, hop))
        .map(|i| {
            let frame = &samples[i * hop..i * hop + window];
            let rms = (frame.iter().map(|s| s * s).sum::<f64>() / window as f64).sqrt();
            if rms > 0.0 {
                (20.0 * rms.log10()).max(DB_FLOOR)
            } else {
                DB_FLOOR
            }
        })
        .collect()
}

fn hann(len: usize) -> Vec<f64> {
    if len <= 1 {
        return vec![1.0; len];
    }
    (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (len - 1) as f64).cos())
        .collect()
}

/// Magnitude of the Hann-windowed DFT of `frame` at an arbitrary frequency.
fn windowed_dft_mag(frame: &[f64], window: &[f64], freq: f64, sample_rate: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * freq / sample_rate;
    let (mut re, mut im) = (0.0, 0.0);
    for (n, (&x, &h)) in frame.iter().zip(window).enumerate() {
        let phase = w * n as f64;
        let v = x * h;
        re += v * phase.cos();
        im -= v * phase.sin();
    }
    (re * re + im * im).sqrt()
}

/// Single-frame f0 estimate: normalized autocorrelation peak in the violin
/// range with parabolic lag refinement. Returns (f0, clarity); clarity
/// below [`CLARITY_THRESHOLD`] means unvoiced.
fn frame_f0(frame: &[f64], sample_rate: f64) -> (f64, f64) {
    let n = frame.len();
    let mean = frame.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = frame.iter().map(|s| s - mean).collect();

    let energy = x.iter().map(|s| s * s).sum::<f64>();
    if energy / (n as f64) < 1e-12 {
        return (0.0, 0.0);
    }

    let lag_min = (sample_rate / F0_MAX_HZ).floor().max(2.0) as usize;
    let lag_max = ((sample_rate / F0_MIN_HZ).ceil() as usize).min(n - 2);
    if lag_min + 1 >= lag_max {
        return (0.0, 0.0);
    }

    // Unbiased, energy-normalized autocorrelation; ~cos-shaped for a tone.
    let rho = |lag: usize| -> f64 {
        let r: f64 = x[..n - lag].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum();
        (r / (n - lag) as f64) / (energy / n as f64)
    };
    let rhos: Vec<f64> = (lag_min - 1..=lag_max + 1).map(rho).collect();
    let at = |lag: usize| rhos[lag - (lag_min - 1)];

    // Collect local maxima, then take the shortest lag whose peak is within
    // 10% of the best: a periodic signal repeats at every multiple of its
    // period, and the shortest strong lag is the true one.
    let mut best = 0.0f64;
    let mut peaks: Vec<usize> = Vec::new();
    for lag in lag_min..=lag_max {
        if at(lag) >= at(lag - 1) && at(lag) > at(lag + 1) {
            peaks.push(lag);
            best = best.max(at(lag));
        }
    }
    if peaks.is_empty() || best < CLARITY_THRESHOLD {
        return (0.0, 0.0);
    }
    let lag = *peaks
        .iter()
        .find(|&&lag| at(lag) >= 0.9 * best)
        .expect("the best peak itself always qualifies");

    // Parabolic interpolation for sub-sample period precision.
    let (prev, curr, next) = (at(lag - 1), at(lag), at(lag + 1));
    let denom = prev - 2.0 * curr + next;
    let delta = if denom.abs() > 1e-12 {
        (0.5 * (prev - next) / denom).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let clarity = curr.min(1.0);
    (sample_rate / (lag as f64 + delta), clarity)
}

/// Frame-wise fundamental frequency contour; 0 marks unvoiced frames.
pub fn f0_track(audio: &AudioBuffer, window_s: f64, hop_s: f64) -> Result<Vec<f64>> {
    let sr = f64::from(audio.sample_rate());
    let window = window_len(audio.sample_rate(), window_s);
    let hop = hop_len(audio.sample_rate(), hop_s);
    let samples = audio.samples();
    if samples.len() < window {
        return Err(Error::Feature(format!(
            "audio shorter than one {window_s} s analysis window"
        )));
    }
    Ok((0..frame_count(samples.len(), window, hop))
        .map(|i| {
            let (f0, clarity) = frame_f0(&samples[i * hop..i * hop + window], sr);
            if clarity >= CLARITY_THRESHOLD {
                f0
            } else {
                0.0
            }
        })
        .collect())
}

fn f0_track_slice(samples: &[f64], sample_rate: f64, window: usize, hop: usize) -> Vec<f64> {
    (0..frame_count(samples.len(), window, hop))
        .map(|i| {
            let (f0, clarity) = frame_f0(&samples[i * hop..i * hop + window], sample_rate);
            if clarity >= CLARITY_THRESHOLD {
                f0
            } else {
                0.0
            }
        })
        .collect()
}

/// Dominant modulation rate of the detrended pitch deviation, searched over
/// the vibrato band on a fine grid of a windowed Fourier magnitude.
fn vibrato_rate(times: &[f64], cents: &[f64]) -> f64 {
    let n = cents.len();
    if n < 4 {
        return 0.0;
    }

    // Least-squares linear detrend.
    let mean_t = times.iter().sum::<f64>() / n as f64;
    let mean_c = cents.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&t, &c) in times.iter().zip(cents) {
        num += (t - mean_t) * (c - mean_c);
        den += (t - mean_t) * (t - mean_t);
    }
    let slope = if den > 0.0 { num / den } else { 0.0 };
    let dev: Vec<f64> = times
        .iter()
        .zip(cents)
        .map(|(&t, &c)| c - mean_c - slope * (t - mean_t))
        .collect();

    // Sinusoid-equivalent amplitude gate.
    let rms = (dev.iter().map(|d| d * d).sum::<f64>() / n as f64).sqrt();
    if rms * std::f64::consts::SQRT_2 < VIBRATO_MIN_CENTS {
        return 0.0;
    }

    let t0 = times[0];
    let span = times[n - 1] - t0;
    if span <= 0.0 {
        return 0.0;
    }
    let taper: Vec<f64> = times
        .iter()
        .map(|&t| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * (t - t0) / span).cos())
        .collect();

    let mut best = (0.0, 0.0);
    let mut freq = VIBRATO_BAND_HZ.0;
    while freq <= VIBRATO_BAND_HZ.1 + 1e-9 {
        let (mut re, mut im) = (0.0, 0.0);
        for ((&t, &d), &w) in times.iter().zip(&dev).zip(&taper) {
            let phase = 2.0 * std::f64::consts::PI * freq * (t - t0);
            re += d * w * phase.cos();
            im -= d * w * phase.sin();
        }
        let mag = re * re + im * im;
        if mag > best.1 {
            best = (freq, mag);
        }
        freq += 0.02;
    }
    best.0
}

/// Extract the five audio features for one note of a score-aligned buffer.
pub fn extract_note_audio_features(
    audio: &AudioBuffer,
    note: &crate::score::NoteEvent,
) -> Result<NoteAudioFeatures> {
    let sr = f64::from(audio.sample_rate());
    let start = (note.onset * sr).round() as i64;
    let end = (note.offset * sr).round() as i64;
    if start < 0 || end > audio.samples().len() as i64 || start >= end {
        return Err(Error::Feature(format!(
            "note span {:.3}..{:.3} s outside audio of {:.3} s",
            note.onset,
            note.offset,
            audio.duration()
        )));
    }
    let seg = &audio.samples()[start as usize..end as usize];

    let window = window_len(audio.sample_rate(), WINDOW_S);
    let hop = hop_len(audio.sample_rate(), HOP_S);
    let nframes = frame_count(seg.len(), window, hop);
    if nframes < 2 {
        return Err(Error::Feature(format!(
            "note of {:.3} s is shorter than two analysis frames",
            note.duration()
        )));
    }

    let db = frame_db(seg, window, hop);
    let volume = db.iter().sum::<f64>() / db.len() as f64;
    let fluctuation = (db.iter().map(|d| (d - volume) * (d - volume)).sum::<f64>() / db.len() as f64).sqrt();
    let peak_frame = db
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let peak_position = peak_frame as f64 / (nframes - 1) as f64;

    let f0s = f0_track_slice(seg, sr, window, hop);
    let voiced: Vec<(f64, f64)> = f0s
        .iter()
        .enumerate()
        .filter(|(_, &f)| f > 0.0)
        .map(|(i, &f)| (i as f64 * HOP_S, f))
        .collect();

    let mut vibrato = 0.0;
    let mut brightness = 1.0;
    if voiced.len() * 5 < f0s.len() {
        log::warn!(
            "f0 undetectable for {}/{} frames; reporting no vibrato",
            f0s.len() - voiced.len(),
            f0s.len()
        );
    } else {
        let log_mean = voiced.iter().map(|(_, f)| f.log2()).sum::<f64>() / voiced.len() as f64;
        let f0_center = log_mean.exp2();
        let times: Vec<f64> = voiced.iter().map(|&(t, _)| t).collect();
        let cents: Vec<f64> = voiced.iter().map(|&(_, f)| 1200.0 * (f / f0_center).log2()).collect();
        vibrato = vibrato_rate(&times, &cents);

        // Brightness: harmonic centroid of the mean magnitude spectrum.
        // Harmonics are sampled at multiples of each frame's own f0 so a
        // vibrato-modulated pitch keeps the sampling points on the
        // harmonic peaks; unvoiced frames fall back to the note center.
        let nyquist = sr / 2.0;
        let h_max = ((nyquist / f0_center).ceil() as usize).saturating_sub(1).min(MAX_HARMONICS);
        if h_max >= 1 {
            let win = hann(window);
            let mut mags = vec![0.0f64; h_max];
            for i in 0..nframes {
                let frame = &seg[i * hop..i * hop + window];
                let f0_frame = if f0s[i] > 0.0 { f0s[i] } else { f0_center };
                for (h, mag) in mags.iter_mut().enumerate() {
                    let freq = (h + 1) as f64 * f0_frame;
                    if freq < nyquist {
                        *mag += windowed_dft_mag(frame, &win, freq, sr);
                    }
                }
            }
            let total: f64 = mags.iter().sum();
            if total > 0.0 {
                brightness = mags
                    .iter()
                    .enumerate()
                    .map(|(h, m)| (h + 1) as f64 * m)
                    .sum::<f64>()
                    / total;
            }
        }
    }

    Ok(NoteAudioFeatures {
        volume,
        fluctuation,
        peak_position,
        vibrato,
        brightness,
    })
}

/// Extract the full feature set for a recording aligned with its score.
pub fn extract_piece_features(score: &Score, audio: &AudioBuffer) -> Result<PieceFeatures> {
    let tempo = piece_tempo(score)?;
    let alpha = ioi_per_beat(score)?;
    let timing = note_timing_features(score)?;
    let notes = score
        .notes()
        .iter()
        .zip(timing)
        .map(|(note, timing)| {
            Ok(NoteFeatures {
                timing,
                audio: extract_note_audio_features(audio, note)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PieceFeatures {
        tempo,
        ioi_per_beat: alpha,
        notes,
    })
}
