//! Notated dynamics and articulation symbols as synthesis controls.
//!
//! The volume table stems from notation-software velocity defaults, the
//! attack table from instrument-definition conventions; both ship as
//! compiled-in constants and are dumped verbatim by the CLI `tables`
//! subcommand. Volume scaling is relative to mf, the default dynamic.

use crate::expression::RenderParams;
use crate::score::{Articulation, Dynamic, Score};
use crate::{Error, Result};

/// Volume control value per dynamic marking.
pub fn dynamic_to_volume(marking: Dynamic) -> f64 {
    match marking {
        Dynamic::Ppp => 0.164,
        Dynamic::Pp => 0.313,
        Dynamic::P => 0.484,
        Dynamic::Mp => 0.564,
        Dynamic::Mf => 0.664,
        Dynamic::F => 0.773,
        Dynamic::Ff => 0.890,
        Dynamic::Fff => 1.00,
    }
}

/// Attack control value per articulation symbol. Staccato and tenuto share
/// a value deliberately.
pub fn articulation_to_attack(symbol: Articulation) -> f64 {
    match symbol {
        Articulation::Staccato => 0.545,
        Articulation::Accent => 0.600,
        Articulation::Marcato => 0.655,
        Articulation::Tenuto => 0.545,
        Articulation::Legato => 0.227,
    }
}

/// The full dynamic table in marking order.
pub fn dynamic_table() -> [(Dynamic, f64); 8] {
    Dynamic::ALL.map(|d| (d, dynamic_to_volume(d)))
}

/// The full articulation table.
pub fn articulation_table() -> [(Articulation, f64); 5] {
    Articulation::ALL.map(|a| (a, articulation_to_attack(a)))
}

/// Overlay score markings onto sampled controls.
///
/// A dynamic marking rescales the sampled volume by `table(marking) /
/// table(mf)`, clamped to [0, 1], and persists until superseded (standard
/// notation semantics). An articulation symbol replaces the attack on its
/// own note only. Notes before any marking pass through untouched.
pub fn apply_score_markings(score: &Score, params: &[RenderParams]) -> Result<Vec<RenderParams>> {
    if params.len() != score.len() {
        return Err(Error::Score(format!(
            "{} parameter sets for {} notes",
            params.len(),
            score.len()
        )));
    }
    let mf = dynamic_to_volume(Dynamic::Mf);
    let mut active: Option<Dynamic> = None;
    Ok(score
        .notes()
        .iter()
        .zip(params)
        .map(|(note, p)| {
            let mut p = *p;
            if note.dynamic.is_some() {
                active = note.dynamic;
            }
            if let Some(dynamic) = active {
                p.volume = (p.volume * dynamic_to_volume(dynamic) / mf).clamp(0.0, 1.0);
            }
            if let Some(symbol) = note.articulation {
                p.attack = articulation_to_attack(symbol);
            }
            p
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expression::DEFAULT_ATTACK;
    use crate::score::{NoteEvent, SourceKind};

    fn params(volume: f64) -> RenderParams {
        RenderParams {
            volume,
            fluctuation: 0.5,
            peak_position: 0.5,
            vibrato: 0.5,
            brightness: 0.5,
            attack: DEFAULT_ATTACK,
        }
    }

    fn marked_score(marks: &[(Option<Dynamic>, Option<Articulation>)]) -> Score {
        let notes = marks
            .iter()
            .enumerate()
            .map(|(k, &(dynamic, articulation))| {
                let mut n = NoteEvent::new(60, k as f64 * 0.5, k as f64 * 0.5 + 0.4, 1.0);
                n.dynamic = dynamic;
                n.articulation = articulation;
                n
            })
            .collect();
        Score::new(notes, 960, SourceKind::MusicXml).unwrap()
    }

    #[test]
    fn dynamic_table_values() {
        let want = [0.164, 0.313, 0.484, 0.564, 0.664, 0.773, 0.890, 1.00];
        for (d, w) in Dynamic::ALL.iter().zip(want) {
            assert_eq!(dynamic_to_volume(*d), w, "{}", d.name());
        }
        // Strictly increasing across the marking order.
        for pair in want.windows(2) {
            assert!(pair[0] < pair[1]);
        }
    }

    #[test]
    fn articulation_table_values() {
        assert_eq!(articulation_to_attack(Articulation::Staccato), 0.545);
        assert_eq!(articulation_to_attack(Articulation::Accent), 0.600);
        assert_eq!(articulation_to_attack(Articulation::Marcato), 0.655);
        assert_eq!(articulation_to_attack(Articulation::Tenuto), 0.545);
        assert_eq!(articulation_to_attack(Articulation::Legato), 0.227);
    }

    #[test]
    fn worked_example_piano_scaling() {
        // 0.661 rendered, marked p: 0.661 * 0.484 / 0.664 = 0.482.
        let score = marked_score(&[(Some(Dynamic::P), None)]);
        let out = apply_score_markings(&score, &[params(0.661)]).unwrap();
        assert!((out[0].volume - 0.482).abs() <= 0.001, "{}", out[0].volume);
    }

    #[test]
    fn mf_is_the_reference() {
        let score = marked_score(&[(Some(Dynamic::Mf), None)]);
        let out = apply_score_markings(&score, &[params(0.7)]).unwrap();
        assert_eq!(out[0].volume, 0.7);
    }

    #[test]
    fn loud_markings_clamp_to_one() {
        let score = marked_score(&[(Some(Dynamic::Fff), None)]);
        let out = apply_score_markings(&score, &[params(0.9)]).unwrap();
        // 0.9 / 0.664 = 1.355 before the clamp.
        assert_eq!(out[0].volume, 1.0);
    }

    #[test]
    fn unmarked_notes_pass_through_bit_identical() {
        let score = marked_score(&[(None, None), (None, None)]);
        let input = [params(0.3), params(0.8)];
        let out = apply_score_markings(&score, &input).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn dynamics_carry_forward_until_superseded() {
        let score = marked_score(&[
            (None, None),
            (Some(Dynamic::P), None),
            (None, None),
            (Some(Dynamic::F), None),
        ]);
        let out = apply_score_markings(&score, &[params(0.664); 4]).unwrap();
        assert_eq!(out[0].volume, 0.664); // before any marking
        assert!((out[1].volume - 0.484).abs() < 1e-12);
        assert!((out[2].volume - 0.484).abs() < 1e-12); // carried forward
        assert!((out[3].volume - 0.773).abs() < 1e-12);
    }

    #[test]
    fn articulation_sets_attack_per_note_only() {
        let score = marked_score(&[(None, Some(Articulation::Legato)), (None, None)]);
        let out = apply_score_markings(&score, &[params(0.5), params(0.5)]).unwrap();
        assert_eq!(out[0].attack, 0.227);
        assert_eq!(out[1].attack, DEFAULT_ATTACK);
    }

    #[test]
    fn louder_marking_never_reduces_volume() {
        for rendered in [0.1, 0.4, 0.661, 0.95] {
            let mut previous = 0.0;
            for d in Dynamic::ALL {
                let score = marked_score(&[(Some(d), None)]);
                let out = apply_score_markings(&score, &[params(rendered)]).unwrap();
                assert!(out[0].volume >= previous, "{} at {rendered}", d.name());
                assert!((0.0..=1.0).contains(&out[0].volume));
                previous = out[0].volume;
            }
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let score = marked_score(&[(None, None), (None, None)]);
        assert!(apply_score_markings(&score, &[params(0.5)]).is_err());
    }
}
