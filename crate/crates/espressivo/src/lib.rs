//! Expressive violin performance rendering from symbolic scores.
//!
//! The pipeline turns a MIDI or MusicXML score plus an expressive musical
//! term (EMT) such as *Tranquillo* or *Agitato* into a mono 16 kHz
//! performance:
//!
//! 1. [`score`] parses the input into a canonical note list.
//! 2. [`expression`] holds per-EMT Gaussian statistics over tempo, timing
//!    and per-note control features, fitted from recordings and sampled
//!    with symmetric truncation.
//! 3. [`timing`] rewrites note onsets/offsets from sampled tempo,
//!    normalized-IOI and coverage values.
//! 4. [`articulation`] maps notated dynamics and articulation symbols onto
//!    the sampled controls.
//! 5. [`synth`] renders each note with a deterministic harmonic-plus-noise
//!    synthesizer whose measurable features invert back to its inputs.
//! 6. [`features`] extracts the same features from audio, closing the loop
//!    for fitting and for the maximum-likelihood classifier.

pub mod articulation;
pub mod audio;
pub mod expression;
pub mod features;
pub mod manifest;
pub mod midi;
pub mod musicxml;
pub mod score;
pub mod synth;
pub mod timing;

pub use audio::{read_wav, write_wav, AudioBuffer, SAMPLE_RATE};
pub use expression::{
    classify, fit_expression_model, load_model, normalize_recording, render_params, sample_truncated,
    save_model, ExpressionModel, Gaussian, RenderParams,
};
pub use features::{
    extract_note_audio_features, extract_piece_features, f0_track, note_timing_features,
    piece_tempo, NoteAudioFeatures, NoteFeatures, NoteTimingFeatures, PieceFeatures,
};
pub use midi::{parse_midi, write_midi};
pub use musicxml::parse_musicxml;
pub use score::{Articulation, Dynamic, NoteEvent, Score, SourceKind};
pub use synth::{render_audio, synth_note, DenormTable};
pub use timing::{apply_coverage, modify_midi, resample_iois, scale_tempo, TimingPlan};

/// Everything one render produces: the timing-rewritten score, the
/// sampled plan and controls (after score markings), and the audio.
#[derive(Debug, Clone)]
pub struct Performance {
    pub score: Score,
    pub plan: TimingPlan,
    pub params: Vec<RenderParams>,
    pub audio: AudioBuffer,
}

/// Run the full rendering pipeline for one score under one expressive
/// term. The seed fully determines the output; the CLI and the C bindings
/// both call this, so a shared seed reproduces bytes across them.
pub fn render_performance(
    score: &Score,
    model: &ExpressionModel,
    emt: &str,
    seed: u64,
) -> Result<Performance> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (rewritten, plan) = timing::modify_midi(score, model, emt, &mut rng)?;
    let sampled = expression::render_params(model, emt, rewritten.len(), &mut rng)?;
    let params = articulation::apply_score_markings(&rewritten, &sampled)?;
    let audio = synth::render_audio(&rewritten, &params, &model.denorm)?;
    Ok(Performance {
        score: rewritten,
        plan,
        params,
        audio,
    })
}

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("midi: {0}")]
    Midi(String),
    #[error("musicxml: {0}")]
    MusicXml(String),
    #[error("wav: {0}")]
    Wav(String),
    #[error("invalid score: {0}")]
    Score(String),
    #[error("feature extraction: {0}")]
    Feature(String),
    #[error("model: {0}")]
    Model(String),
    #[error("unknown expressive term `{term}`; available: {available}")]
    UnknownEmt { term: String, available: String },
    #[error("synthesis: {0}")]
    Synth(String),
    #[error("timing: {0}")]
    Timing(String),
    #[error("manifest: {0}")]
    Manifest(String),
}

pub type Result<T> = std::result::Result<T, Error>;
