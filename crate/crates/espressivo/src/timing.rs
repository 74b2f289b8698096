//! Score timing rewrite: tempo scaling, IOI resampling, coverage offsets.
//!
//! [`modify_midi`] composes the three steps in order. Tempo scaling
//! multiplies all times by `c = target / current` so the rewritten score's
//! measured tempo equals the sampled target. IOI resampling stretches each
//! inter-onset gap by its sampled factor, anchored at the first onset.
//! Coverage sets each offset as a fraction of the (new) gap to the next
//! onset; the last note, having no successor, scales its own duration.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::expression::{sample_truncated, ExpressionModel};
use crate::features::{piece_tempo, COVERAGE_CAP};
use crate::score::Score;
use crate::{Error, Result};

/// Smallest value timing draws are clamped to; keeps every factor positive.
const DRAW_FLOOR: f64 = 1e-6;

/// The sampled timing draws behind one rewrite, kept for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingPlan {
    /// Target tempo, seconds per beat.
    pub target_tempo: f64,
    /// One stretch factor per inter-onset gap (K-1 entries).
    pub ioi_factors: Vec<f64>,
    /// One coverage per note (K entries), in (0, 1.2].
    pub coverage: Vec<f64>,
}

/// Scale all onsets and offsets so the score's measured tempo becomes
/// `target` seconds per beat.
pub fn scale_tempo(score: &Score, target: f64) -> Result<Score> {
    if !target.is_finite() || target <= 0.0 {
        return Err(Error::Timing(format!("target tempo {target} not positive")));
    }
    let current = piece_tempo(score)?;
    let c = target / current;
    score.with_timing(|_, n| (n.onset * c, n.offset * c))
}

/// Stretch each inter-onset gap by its factor, anchored at the first
/// onset. Offsets provisionally keep their note's duration.
pub fn resample_iois(score: &Score, factors: &[f64]) -> Result<Score> {
    let notes = score.notes();
    if factors.len() + 1 != notes.len() {
        return Err(Error::Timing(format!(
            "{} IOI factors for {} notes (need one per gap)",
            factors.len(),
            notes.len()
        )));
    }
    if let Some(bad) = factors.iter().find(|f| !f.is_finite() || **f <= 0.0) {
        return Err(Error::Timing(format!("IOI factor {bad} not positive")));
    }

    let mut onsets = Vec::with_capacity(notes.len());
    onsets.push(notes[0].onset);
    for (k, factor) in factors.iter().enumerate() {
        let gap = notes[k + 1].onset - notes[k].onset;
        onsets.push(onsets[k] + factor * gap);
    }
    score.with_timing(|k, n| (onsets[k], onsets[k] + n.duration()))
}

/// Set each offset from its coverage: a fraction of the gap to the next
/// onset, or of the note's own duration for the final note.
pub fn apply_coverage(score: &Score, coverage: &[f64]) -> Result<Score> {
    let notes = score.notes();
    if coverage.len() != notes.len() {
        return Err(Error::Timing(format!(
            "{} coverage values for {} notes",
            coverage.len(),
            notes.len()
        )));
    }
    if let Some(bad) = coverage.iter().find(|c| !c.is_finite() || **c <= 0.0) {
        return Err(Error::Timing(format!("coverage {bad} not positive")));
    }
    score.with_timing(|k, n| {
        let base = match notes.get(k + 1) {
            Some(next) => next.onset - n.onset,
            None => n.duration(),
        };
        (n.onset, n.onset + coverage[k] * base)
    })
}

/// Sample a timing plan for `emt` and rewrite the score: tempo scale, then
/// IOI resampling, then coverage. Returns the rewritten score together
/// with the plan that produced it.
pub fn modify_midi(
    score: &Score,
    model: &ExpressionModel,
    emt: &str,
    rng: &mut impl Rng,
) -> Result<(Score, TimingPlan)> {
    let g = model.emt(emt)?;
    let n = score.len();

    let target_tempo = sample_truncated(g.tempo.mean, g.tempo.std, rng).max(DRAW_FLOOR);
    let ioi_factors: Vec<f64> = (0..n.saturating_sub(1))
        .map(|_| sample_truncated(g.normalized_ioi.mean, g.normalized_ioi.std, rng).max(DRAW_FLOOR))
        .collect();
    let coverage: Vec<f64> = (0..n)
        .map(|_| {
            sample_truncated(g.coverage.mean, g.coverage.std, rng).clamp(DRAW_FLOOR, COVERAGE_CAP)
        })
        .collect();

    let plan = TimingPlan {
        target_tempo,
        ioi_factors,
        coverage,
    };
    let rewritten = apply_plan(score, &plan)?;
    Ok((rewritten, plan))
}

/// Apply an existing plan (tempo, IOI factors, coverage, in that order).
pub fn apply_plan(score: &Score, plan: &TimingPlan) -> Result<Score> {
    let scaled = scale_tempo(score, plan.target_tempo)?;
    let resampled = resample_iois(&scaled, &plan.ioi_factors)?;
    apply_coverage(&resampled, &plan.coverage)
}
