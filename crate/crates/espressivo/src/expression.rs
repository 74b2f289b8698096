//! Per-EMT Gaussian statistics: normalization, fitting, truncated
//! sampling, persistence, and a maximum-likelihood classifier.
//!
//! Each expressive musical term (EMT) gets an independent Gaussian per
//! feature: one piece-level tempo Gaussian over its recordings, and one
//! Gaussian per note-level feature over the pooled notes of all its
//! recordings. Note-level audio features are min-max normalized per
//! recording before fitting; timing features stay on their natural
//! dimensionless scale. All sampling is symmetric-truncated to one
//! standard deviation around the mean.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::features::{NoteFeature, PieceFeatures, DB_FLOOR};
use crate::synth::DenormTable;
use crate::{Error, Result};

/// One-dimensional Gaussian described by mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub std: f64,
}

impl Gaussian {
    pub fn new(mean: f64, std: f64) -> Self {
        Gaussian { mean, std }
    }

    /// Mean and unbiased (n-1) sample deviation. At least one value;
    /// a single value gets deviation zero.
    fn fit(values: &[f64]) -> Gaussian {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Gaussian { mean, std }
    }

    /// Log density with the deviation floored for degenerate fits.
    fn log_pdf_floored(&self, x: f64, floor: f64) -> f64 {
        let std = self.std.max(floor);
        let z = (x - self.mean) / std;
        -0.5 * z * z - std.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
}

/// Per-EMT Gaussians: piece-level tempo plus the seven note-level features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmtGaussians {
    /// Seconds per beat.
    pub tempo: Gaussian,
    pub normalized_ioi: Gaussian,
    pub coverage: Gaussian,
    pub volume: Gaussian,
    pub fluctuation: Gaussian,
    pub peak_position: Gaussian,
    pub vibrato: Gaussian,
    pub brightness: Gaussian,
}

impl EmtGaussians {
    pub fn feature(&self, f: NoteFeature) -> &Gaussian {
        match f {
            NoteFeature::NormalizedIoi => &self.normalized_ioi,
            NoteFeature::Coverage => &self.coverage,
            NoteFeature::Volume => &self.volume,
            NoteFeature::Fluctuation => &self.fluctuation,
            NoteFeature::PeakPosition => &self.peak_position,
            NoteFeature::Vibrato => &self.vibrato,
            NoteFeature::Brightness => &self.brightness,
        }
    }
}

/// Fitted expression model: Gaussians per EMT plus the physical ranges the
/// synthesizer uses to denormalize sampled unit-range controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionModel {
    pub emts: BTreeMap<String, EmtGaussians>,
    pub denorm: DenormTable,
}

/// Schema version of the persisted model document.
pub const MODEL_DOC_VERSION: u32 = 1;

/// Deviation floor applied inside the classifier so zero-variance fits
/// cannot produce infinite log densities.
pub const CLASSIFIER_STD_FLOOR: f64 = 1e-3;

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    version: u32,
    #[serde(flatten)]
    model: ExpressionModel,
}

impl ExpressionModel {
    pub fn emt(&self, name: &str) -> Result<&EmtGaussians> {
        self.emts.get(name).ok_or_else(|| Error::UnknownEmt {
            term: name.to_string(),
            available: self.emts.keys().cloned().collect::<Vec<_>>().join(", "),
        })
    }

    fn validate(&self) -> Result<()> {
        if self.emts.is_empty() {
            return Err(Error::Model("model has no expressive terms".into()));
        }
        self.denorm.validate()?;
        for (name, g) in &self.emts {
            let mut all = vec![("tempo", &g.tempo)];
            all.extend(NoteFeature::ALL.map(|f| (f.name(), g.feature(f))));
            for (feature, gauss) in all {
                if !gauss.std.is_finite() || gauss.std < 0.0 || !gauss.mean.is_finite() {
                    return Err(Error::Model(format!("{name}/{feature}: invalid gaussian")));
                }
            }
            // The five normalized control features live on [0, 1].
            for f in [
                NoteFeature::Volume,
                NoteFeature::Fluctuation,
                NoteFeature::PeakPosition,
                NoteFeature::Vibrato,
                NoteFeature::Brightness,
            ] {
                let mean = g.feature(f).mean;
                if !(0.0..=1.0).contains(&mean) {
                    return Err(Error::Model(format!(
                        "{name}/{}: normalized mean {mean} outside [0, 1]",
                        f.name()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Serialize a model as its versioned JSON document.
pub fn save_model(model: &ExpressionModel) -> Vec<u8> {
    let doc = ModelDoc {
        version: MODEL_DOC_VERSION,
        model: model.clone(),
    };
    serde_json::to_vec_pretty(&doc).expect("model serialization cannot fail")
}

/// Parse and validate a model document.
pub fn load_model(bytes: &[u8]) -> Result<ExpressionModel> {
    let doc: ModelDoc =
        serde_json::from_slice(bytes).map_err(|e| Error::Model(format!("bad model document: {e}")))?;
    if doc.version != MODEL_DOC_VERSION {
        return Err(Error::Model(format!("unsupported model version {}", doc.version)));
    }
    doc.model.validate()?;
    Ok(doc.model)
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Min-max a value; a degenerate recording (max == min) maps to 0.5.
fn rescale(value: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (value - lo) / (hi - lo)
    } else {
        0.5
    }
}

/// Per-recording min-max normalization of the audio features.
///
/// Volume uses the fixed floor / recording-max pair; fluctuation, vibrato
/// and brightness use the recording's own min/max; peak position is
/// already in [0, 1]; timing features pass through untouched.
pub fn normalize_recording(piece: &PieceFeatures) -> PieceFeatures {
    let mut out = piece.clone();
    let (_, vol_hi) = min_max(piece.notes.iter().map(|n| n.audio.volume));
    for f in [NoteFeature::Fluctuation, NoteFeature::Vibrato, NoteFeature::Brightness] {
        let (lo, hi) = min_max(piece.notes.iter().map(|n| n.get(f)));
        for note in &mut out.notes {
            note.set(f, rescale(note.get(f), lo, hi));
        }
    }
    for note in &mut out.notes {
        note.audio.volume = rescale(note.audio.volume, DB_FLOOR, vol_hi);
    }
    out
}

/// Fit per-EMT Gaussians from normalized recordings.
///
/// Every EMT needs at least two recordings and eight notes in total. The
/// tempo Gaussian is fitted across recording-level tempos; each note-level
/// feature is fitted over the pooled notes of the EMT's recordings with
/// unbiased variance.
pub fn fit_expression_model(
    corpus: &[(String, PieceFeatures)],
    denorm: DenormTable,
) -> Result<ExpressionModel> {
    let mut grouped: BTreeMap<&str, Vec<&PieceFeatures>> = BTreeMap::new();
    for (emt, piece) in corpus {
        grouped.entry(emt.as_str()).or_default().push(piece);
    }
    if grouped.is_empty() {
        return Err(Error::Model("empty corpus".into()));
    }

    let mut emts = BTreeMap::new();
    for (emt, pieces) in grouped {
        if pieces.len() < 2 {
            return Err(Error::Model(format!(
                "expressive term `{emt}` has {} recording(s); need at least 2",
                pieces.len()
            )));
        }
        let note_count: usize = pieces.iter().map(|p| p.notes.len()).sum();
        if note_count < 8 {
            return Err(Error::Model(format!(
                "expressive term `{emt}` has {note_count} notes in total; need at least 8"
            )));
        }

        let tempos: Vec<f64> = pieces.iter().map(|p| p.tempo).collect();
        let pooled = |f: NoteFeature| -> Gaussian {
            let values: Vec<f64> = pieces
                .iter()
                .flat_map(|p| p.notes.iter().map(move |n| n.get(f)))
                .collect();
            Gaussian::fit(&values)
        };

        emts.insert(
            emt.to_string(),
            EmtGaussians {
                tempo: Gaussian::fit(&tempos),
                normalized_ioi: pooled(NoteFeature::NormalizedIoi),
                coverage: pooled(NoteFeature::Coverage),
                volume: pooled(NoteFeature::Volume),
                fluctuation: pooled(NoteFeature::Fluctuation),
                peak_position: pooled(NoteFeature::PeakPosition),
                vibrato: pooled(NoteFeature::Vibrato),
                brightness: pooled(NoteFeature::Brightness),
            },
        );
    }

    let model = ExpressionModel { emts, denorm };
    model.validate()?;
    Ok(model)
}

/// Draw from a Gaussian conditioned on `[mean - std, mean + std]` by
/// rejection. A zero deviation returns the mean.
pub fn sample_truncated(mean: f64, std: f64, rng: &mut impl Rng) -> f64 {
    debug_assert!(std >= 0.0, "negative standard deviation");
    if std <= 0.0 {
        return mean;
    }
    let normal = Normal::new(mean, std).expect("std checked positive");
    // Acceptance probability is erf(1/sqrt(2)) ~ 68%; the cap is unreachable
    // in practice and only guards against a broken Rng.
    for _ in 0..10_000 {
        let draw = normal.sample(rng);
        if (draw - mean).abs() <= std {
            return draw;
        }
    }
    mean
}

/// Truncated draw additionally clamped to [0, 1], for normalized controls.
pub fn sample_truncated_unit(mean: f64, std: f64, rng: &mut impl Rng) -> f64 {
    sample_truncated(mean, std, rng).clamp(0.0, 1.0)
}

/// Per-note synthesis controls, all on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderParams {
    pub volume: f64,
    pub fluctuation: f64,
    pub peak_position: f64,
    pub vibrato: f64,
    pub brightness: f64,
    pub attack: f64,
}

/// Attack used when no articulation symbol overrides it.
pub const DEFAULT_ATTACK: f64 = 0.5;

/// Sample the five control features for `note_count` notes from an EMT's
/// truncated Gaussians. Attack starts at [`DEFAULT_ATTACK`] and is only
/// changed later by score markings.
pub fn render_params(
    model: &ExpressionModel,
    emt: &str,
    note_count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<RenderParams>> {
    if note_count == 0 {
        return Err(Error::Model("cannot render zero notes".into()));
    }
    let g = model.emt(emt)?;
    Ok((0..note_count)
        .map(|_| RenderParams {
            volume: sample_truncated_unit(g.volume.mean, g.volume.std, rng),
            fluctuation: sample_truncated_unit(g.fluctuation.mean, g.fluctuation.std, rng),
            peak_position: sample_truncated_unit(g.peak_position.mean, g.peak_position.std, rng),
            vibrato: sample_truncated_unit(g.vibrato.mean, g.vibrato.std, rng),
            brightness: sample_truncated_unit(g.brightness.mean, g.brightness.std, rng),
            attack: DEFAULT_ATTACK,
        })
        .collect())
}

/// Rank EMTs by log likelihood of a normalized recording: the tempo log
/// density plus per-note log densities over all seven note features.
/// Ties break on lexical EMT order.
pub fn classify(piece: &PieceFeatures, model: &ExpressionModel) -> Vec<(String, f64)> {
    let mut ranked: Vec<(String, f64)> = model
        .emts
        .iter()
        .map(|(name, g)| {
            let mut ll = g.tempo.log_pdf_floored(piece.tempo, CLASSIFIER_STD_FLOOR);
            for note in &piece.notes {
                for f in NoteFeature::ALL {
                    ll += g.feature(f).log_pdf_floored(note.get(f), CLASSIFIER_STD_FLOOR);
                }
            }
            (name.clone(), ll)
        })
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{NoteAudioFeatures, NoteFeatures, NoteTimingFeatures};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn piece(tempo: f64, rows: &[[f64; 7]]) -> PieceFeatures {
        PieceFeatures {
            tempo,
            ioi_per_beat: tempo,
            notes: rows
                .iter()
                .map(|r| NoteFeatures {
                    timing: NoteTimingFeatures {
                        normalized_ioi: r[0],
                        coverage: r[1],
                    },
                    audio: NoteAudioFeatures {
                        volume: r[2],
                        fluctuation: r[3],
                        peak_position: r[4],
                        vibrato: r[5],
                        brightness: r[6],
                    },
                })
                .collect(),
        }
    }

    #[test]
    fn volume_normalization_uses_floor_and_recording_max() {
        let p = piece(
            0.5,
            &[
                [1.0, 1.0, -80.0, 0.0, 0.5, 5.0, 2.0],
                [1.0, 1.0, -40.0, 1.0, 0.5, 6.0, 2.5],
                [1.0, 1.0, -20.0, 2.0, 0.5, 7.0, 3.0],
            ],
        );
        let n = normalize_recording(&p);
        let vols: Vec<f64> = n.notes.iter().map(|x| x.audio.volume).collect();
        assert!((vols[0] - 0.0).abs() < 1e-12);
        assert!((vols[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!((vols[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_feature_maps_to_half() {
        let p = piece(
            0.5,
            &[
                [1.0, 1.0, -30.0, 1.0, 0.2, 6.0, 2.0],
                [1.0, 1.0, -20.0, 2.0, 0.8, 6.0, 2.5],
            ],
        );
        let n = normalize_recording(&p);
        for note in &n.notes {
            assert_eq!(note.audio.vibrato, 0.5); // constant vibrato
        }
        // Peak position and timing pass through untouched.
        assert_eq!(n.notes[0].audio.peak_position, 0.2);
        assert_eq!(n.notes[0].timing.normalized_ioi, 1.0);
    }

    #[test]
    fn normalization_preserves_order_and_hits_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let rows: Vec<[f64; 7]> = (0..12)
                .map(|_| {
                    [
                        rng.gen_range(0.5..1.5),
                        rng.gen_range(0.2..1.2),
                        rng.gen_range(-70.0..-10.0),
                        rng.gen_range(0.0..6.0),
                        rng.gen_range(0.0..1.0),
                        rng.gen_range(0.0..8.0),
                        rng.gen_range(1.0..4.0),
                    ]
                })
                .collect();
            let p = piece(0.5, &rows);
            let n = normalize_recording(&p);
            for f in [NoteFeature::Fluctuation, NoteFeature::Vibrato, NoteFeature::Brightness] {
                let raw: Vec<f64> = p.notes.iter().map(|x| x.get(f)).collect();
                let scaled: Vec<f64> = n.notes.iter().map(|x| x.get(f)).collect();
                let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                for (a, b) in raw.iter().zip(&scaled) {
                    assert!((b - (a - lo) / (hi - lo)).abs() < 1e-12);
                }
                assert!(scaled.iter().cloned().fold(f64::INFINITY, f64::min).abs() < 1e-12);
                assert!((scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - 1.0).abs() < 1e-12);
                // Order preserved.
                let mut idx: Vec<usize> = (0..raw.len()).collect();
                idx.sort_by(|&i, &j| raw[i].partial_cmp(&raw[j]).unwrap());
                for w in idx.windows(2) {
                    assert!(scaled[w[0]] <= scaled[w[1]]);
                }
            }
        }
    }

    fn normalized_piece(tempo: f64, value: f64, notes: usize) -> PieceFeatures {
        piece(tempo, &vec![[1.0, value, value, value, value, value, value]; notes])
    }

    #[test]
    fn fit_constant_tempo_gives_zero_std() {
        let corpus = vec![
            ("A".to_string(), normalized_piece(0.5, 0.5, 4)),
            ("A".to_string(), normalized_piece(0.5, 0.5, 4)),
            ("A".to_string(), normalized_piece(0.5, 0.5, 4)),
        ];
        let model = fit_expression_model(&corpus, DenormTable::default()).unwrap();
        let g = model.emt("A").unwrap();
        assert_eq!(g.tempo.mean, 0.5);
        assert_eq!(g.tempo.std, 0.0);
    }

    #[test]
    fn fit_two_tempos_hand_computed_unbiased_variance() {
        let corpus = vec![
            ("A".to_string(), normalized_piece(0.4, 0.5, 4)),
            ("A".to_string(), normalized_piece(0.6, 0.5, 4)),
        ];
        let model = fit_expression_model(&corpus, DenormTable::default()).unwrap();
        let g = model.emt("A").unwrap();
        assert!((g.tempo.mean - 0.5).abs() < 1e-12);
        // Unbiased variance of {0.4, 0.6} is 0.02; sqrt ~ 0.141421.
        assert!((g.tempo.std - 0.02f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fit_requires_two_recordings_per_emt() {
        let corpus = vec![
            ("A".to_string(), normalized_piece(0.5, 0.5, 8)),
            ("A".to_string(), normalized_piece(0.5, 0.5, 8)),
            ("B".to_string(), normalized_piece(0.7, 0.5, 8)),
        ];
        let err = fit_expression_model(&corpus, DenormTable::default()).unwrap_err();
        assert!(err.to_string().contains("B"), "{err}");
    }

    #[test]
    fn disjoint_supports_give_separated_fits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut corpus = Vec::new();
        for _ in 0..4 {
            let rows_a: Vec<[f64; 7]> = (0..10)
                .map(|_| {
                    let v = rng.gen_range(0.1..0.3);
                    [1.0, 0.5, v, v, v, v, v]
                })
                .collect();
            let rows_b: Vec<[f64; 7]> = (0..10)
                .map(|_| {
                    let v = rng.gen_range(0.7..0.9);
                    [1.0, 0.5, v, v, v, v, v]
                })
                .collect();
            corpus.push(("A".to_string(), piece(0.4, &rows_a)));
            corpus.push(("B".to_string(), piece(0.8, &rows_b)));
        }
        let model = fit_expression_model(&corpus, DenormTable::default()).unwrap();
        let (a, b) = (model.emt("A").unwrap(), model.emt("B").unwrap());
        assert!(a.volume.mean < b.volume.mean);
        // Every pooled sample lies within 4 sigma of its own EMT's mean.
        for (emt, g) in [("A", a), ("B", b)] {
            for (name, p) in &corpus {
                if name == emt {
                    for note in &p.notes {
                        let z = (note.audio.volume - g.volume.mean).abs() / g.volume.std.max(1e-9);
                        assert!(z <= 4.0, "{emt}: z = {z}");
                    }
                }
            }
        }
    }

    #[test]
    fn truncated_sampling_zero_std_returns_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_truncated(0.5, 0.0, &mut rng), 0.5);
    }

    #[test]
    fn truncated_sampling_respects_bounds_and_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mean, std) = (0.5, 0.1);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let draw = sample_truncated(mean, std, &mut rng);
            assert!(draw >= mean - std && draw <= mean + std);
            sum += draw;
        }
        // Symmetric truncation preserves the mean (Monte-Carlo check).
        assert!((sum / n as f64 - mean).abs() < 0.002);
    }

    fn toy_model(emts: &[(&str, f64)]) -> ExpressionModel {
        let gaussians = |center: f64| EmtGaussians {
            tempo: Gaussian::new(0.5, 0.02),
            normalized_ioi: Gaussian::new(1.0, 0.05),
            coverage: Gaussian::new(0.9, 0.05),
            volume: Gaussian::new(center, 0.05),
            fluctuation: Gaussian::new(center, 0.05),
            peak_position: Gaussian::new(center, 0.05),
            vibrato: Gaussian::new(center, 0.05),
            brightness: Gaussian::new(center, 0.05),
        };
        ExpressionModel {
            emts: emts.iter().map(|&(n, c)| (n.to_string(), gaussians(c))).collect(),
            denorm: DenormTable::default(),
        }
    }

    #[test]
    fn render_params_zero_std_returns_means() {
        let mut model = toy_model(&[("A", 0.3)]);
        for g in model.emts.values_mut() {
            g.volume.std = 0.0;
            g.fluctuation.std = 0.0;
            g.peak_position.std = 0.0;
            g.vibrato.std = 0.0;
            g.brightness.std = 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let params = render_params(&model, "A", 1, &mut rng).unwrap();
        assert_eq!(params.len(), 1);
        let p = params[0];
        assert_eq!((p.volume, p.fluctuation, p.peak_position), (0.3, 0.3, 0.3));
        assert_eq!((p.vibrato, p.brightness, p.attack), (0.3, 0.3, DEFAULT_ATTACK));
    }

    #[test]
    fn render_params_deterministic_for_fixed_seed() {
        let model = toy_model(&[("A", 0.4)]);
        let a = render_params(&model, "A", 16, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = render_params(&model, "A", 16, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn render_params_monte_carlo_bounds_and_mean() {
        let model = toy_model(&[("A", 0.5)]);
        let g = model.emt("A").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = render_params(&model, "A", 1000, &mut rng).unwrap();
        let mean = params.iter().map(|p| p.volume).sum::<f64>() / params.len() as f64;
        assert!((mean - g.volume.mean).abs() < 0.01);
        for p in &params {
            assert!(p.volume >= g.volume.mean - g.volume.std && p.volume <= g.volume.mean + g.volume.std);
            assert!((0.0..=1.0).contains(&p.volume));
        }
    }

    #[test]
    fn render_params_unknown_emt() {
        let model = toy_model(&[("A", 0.5)]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = render_params(&model, "Z", 4, &mut rng).unwrap_err();
        assert!(err.to_string().contains("available"), "{err}");
    }

    #[test]
    fn classify_prefers_matching_means() {
        let model = toy_model(&[("A", 0.2), ("B", 0.8)]);
        // A piece sitting exactly on A's means, > 3 sigma from B's.
        let p = normalized_piece(0.5, 0.2, 6);
        let p = PieceFeatures {
            notes: p
                .notes
                .into_iter()
                .map(|mut n| {
                    n.timing.normalized_ioi = 1.0;
                    n.timing.coverage = 0.9;
                    n
                })
                .collect(),
            ..p
        };
        let ranked = classify(&p, &model);
        assert_eq!(ranked[0].0, "A");
        assert!(ranked[0].1 > ranked[1].1);
    }

    #[test]
    fn classify_ties_break_lexically() {
        let model = toy_model(&[("Zeta", 0.5), ("Alpha", 0.5)]);
        let p = normalized_piece(0.5, 0.5, 4);
        let ranked = classify(&p, &model);
        assert_eq!(ranked[0].0, "Alpha");
        assert_eq!(ranked[0].1, ranked[1].1);
    }

    #[test]
    fn classify_argmax_invariant_under_uniform_sigma_scaling() {
        let base = toy_model(&[("A", 0.2), ("B", 0.8)]);
        let p = normalized_piece(0.5, 0.25, 6);
        let top = classify(&p, &base)[0].0.clone();
        let mut scaled = base.clone();
        for g in scaled.emts.values_mut() {
            for f in NoteFeature::ALL {
                let gauss = match f {
                    NoteFeature::NormalizedIoi => &mut g.normalized_ioi,
                    NoteFeature::Coverage => &mut g.coverage,
                    NoteFeature::Volume => &mut g.volume,
                    NoteFeature::Fluctuation => &mut g.fluctuation,
                    NoteFeature::PeakPosition => &mut g.peak_position,
                    NoteFeature::Vibrato => &mut g.vibrato,
                    NoteFeature::Brightness => &mut g.brightness,
                };
                gauss.std *= 2.0;
            }
            g.tempo.std *= 2.0;
        }
        assert_eq!(classify(&p, &scaled)[0].0, top);
    }

    #[test]
    fn model_document_round_trip() {
        let model = toy_model(&[("Agitato", 0.3), ("Tranquillo", 0.7)]);
        let bytes = save_model(&model);
        assert_eq!(load_model(&bytes).unwrap(), model);
    }

    #[test]
    fn truncated_model_file_rejected() {
        let model = toy_model(&[("A", 0.5)]);
        let bytes = save_model(&model);
        let err = load_model(&bytes[..bytes.len() / 2]).unwrap_err();
        assert!(err.to_string().contains("bad model document"), "{err}");
    }

    #[test]
    fn missing_feature_entry_rejected() {
        let model = toy_model(&[("A", 0.5)]);
        let text = String::from_utf8(save_model(&model)).unwrap();
        let broken = text.replace("\"vibrato\"", "\"vibrato_gone\"");
        assert!(load_model(broken.as_bytes()).is_err());
    }

    #[test]
    fn hand_written_minimal_model_loads_and_classifies() {
        let g = r#"{"mean": 0.5, "std": 0.1}"#;
        let text = format!(
            r#"{{
  "version": 1,
  "emts": {{
    "Cantabile": {{
      "tempo": {{"mean": 0.5, "std": 0.05}},
      "normalized_ioi": {g}, "coverage": {g}, "volume": {g},
      "fluctuation": {g}, "peak_position": {g}, "vibrato": {g}, "brightness": {g}
    }}
  }},
  "denorm": {{
    "volume_db": [-60.0, -6.0],
    "fluctuation_db": [0.0, 6.0],
    "vibrato_hz": [4.0, 8.0],
    "vibrato_gate": 0.05,
    "vibrato_depth_cents": 20.0,
    "brightness_centroid": [1.0, 4.0],
    "attack_s": [0.01, 0.15]
  }}
}}"#
        );
        let model = load_model(text.as_bytes()).unwrap();
        let ranked = classify(&normalized_piece(0.5, 0.5, 4), &model);
        assert_eq!(ranked[0].0, "Cantabile");
    }
}
