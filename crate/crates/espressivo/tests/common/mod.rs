//! Shared fixtures for the integration suites.
#![allow(dead_code)] // each test binary uses a different subset

use rand::Rng;

use espressivo::expression::{EmtGaussians, ExpressionModel, Gaussian};
use espressivo::score::{NoteEvent, Score, SourceKind};
use espressivo::synth::DenormTable;

/// Random monophonic score with strictly increasing onsets, coverage kept
/// below the cap, and consecutive pitches always distinct so same-pitch
/// legato overlap never arises.
pub fn random_score(rng: &mut impl Rng) -> Score {
    let count = rng.gen_range(2..=20);
    let mut onset = rng.gen_range(0.0..0.5);
    let mut pitch = rng.gen_range(55u8..100);
    let note_values = [0.25, 0.5, 1.0, 1.5, 2.0];
    let mut notes = Vec::with_capacity(count);
    for k in 0..count {
        let ioi = rng.gen_range(0.15..1.0);
        let duration = if k + 1 == count {
            rng.gen_range(0.2..0.9)
        } else {
            ioi * rng.gen_range(0.3..1.15)
        };
        notes.push(NoteEvent::new(
            pitch,
            onset,
            onset + duration,
            note_values[rng.gen_range(0..note_values.len())],
        ));
        let step = rng.gen_range(1u8..7);
        pitch = if pitch > 90 { pitch - step } else { pitch + step };
        onset += ioi;
    }
    Score::new(notes, 480, SourceKind::Midi).unwrap()
}

/// Metronomic legato score of quarter notes.
pub fn metronomic_score(count: usize, sec_per_beat: f64, pitch_seed: u8) -> Score {
    let notes = (0..count)
        .map(|k| {
            NoteEvent::new(
                55 + ((pitch_seed as usize + k * 3) % 36) as u8,
                k as f64 * sec_per_beat,
                (k as f64 + 1.0) * sec_per_beat,
                1.0,
            )
        })
        .collect();
    Score::new(notes, 480, SourceKind::Midi).unwrap()
}

pub fn gaussians(
    tempo: (f64, f64),
    coverage: (f64, f64),
    peak: (f64, f64),
) -> EmtGaussians {
    EmtGaussians {
        tempo: Gaussian::new(tempo.0, tempo.1),
        normalized_ioi: Gaussian::new(1.0, 0.02),
        coverage: Gaussian::new(coverage.0, coverage.1),
        volume: Gaussian::new(0.5, 0.1),
        fluctuation: Gaussian::new(0.4, 0.1),
        peak_position: Gaussian::new(peak.0, peak.1),
        vibrato: Gaussian::new(0.5, 0.1),
        brightness: Gaussian::new(0.4, 0.1),
    }
}

/// Three synthetic expressive terms separated on tempo, coverage and peak
/// position. The remaining features deliberately share one distribution:
/// per-recording min-max normalization pins their post-extraction values,
/// so they carry no usable between-term signal.
pub fn three_emt_truth() -> ExpressionModel {
    let emts = [
        ("Agitato".to_string(), gaussians((0.35, 0.02), (0.52, 0.05), (0.22, 0.0625))),
        ("Cantabile".to_string(), gaussians((0.50, 0.02), (0.75, 0.05), (0.50, 0.0625))),
        ("Tranquillo".to_string(), gaussians((0.70, 0.02), (0.98, 0.05), (0.78, 0.0625))),
    ];
    ExpressionModel {
        emts: emts.into_iter().collect(),
        denorm: DenormTable::default(),
    }
}
