//! Corpus manifest: which score/audio pairs carry which expressive term,
//! plus path-based loading shared by the CLI and the C bindings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::expression::normalize_recording;
use crate::features::{extract_piece_features, PieceFeatures};
use crate::score::Score;
use crate::{Error, Result};

/// One recording of one piece under one expressive term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub score_path: PathBuf,
    pub audio_path: PathBuf,
    pub emt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub performer: Option<String>,
}

/// Corpus manifest document; relative paths resolve against the manifest's
/// own directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn parse(text: &str) -> Result<CorpusManifest> {
        let manifest: CorpusManifest =
            serde_json::from_str(text).map_err(|e| Error::Manifest(format!("bad manifest: {e}")))?;
        if manifest.entries.is_empty() {
            return Err(Error::Manifest("manifest has no entries".into()));
        }
        if let Some(entry) = manifest.entries.iter().find(|e| e.emt.trim().is_empty()) {
            return Err(Error::Manifest(format!(
                "entry for {} has an empty expressive term",
                entry.score_path.display()
            )));
        }
        Ok(manifest)
    }

    /// Resolve all entry paths against `base` (the manifest's directory).
    pub fn resolved(&self, base: &Path) -> CorpusManifest {
        let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        CorpusManifest {
            entries: self
                .entries
                .iter()
                .map(|e| ManifestEntry {
                    score_path: resolve(&e.score_path),
                    audio_path: resolve(&e.audio_path),
                    emt: e.emt.clone(),
                    performer: e.performer.clone(),
                })
                .collect(),
        }
    }
}

/// Load a score by file extension: `.mid`/`.midi`/`.smf` as Standard MIDI,
/// `.xml`/`.musicxml` as MusicXML, `.json` as the canonical document.
pub fn load_score_path(path: &Path) -> Result<Score> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "mid" | "midi" | "smf" => {
            let bytes = read_file(path)?;
            crate::midi::parse_midi(&bytes)
        }
        "xml" | "musicxml" => {
            let text = read_text(path)?;
            crate::musicxml::parse_musicxml(&text)
        }
        "json" => {
            let text = read_text(path)?;
            Score::from_canonical_json(&text)
        }
        other => Err(Error::Score(format!(
            "unrecognized score extension `{other}` for {}",
            path.display()
        ))),
    }
}

/// Load a WAV file into the pipeline's buffer format.
pub fn load_audio_path(path: &Path) -> Result<AudioBuffer> {
    let bytes = read_file(path)?;
    crate::audio::read_wav(&bytes)
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Manifest(format!("reading {}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Manifest(format!("reading {}: {e}", path.display())))
}

/// Read a manifest, extract features for every entry, and normalize them
/// per recording, ready for fitting.
pub fn load_corpus(manifest_path: &Path) -> Result<Vec<(String, PieceFeatures)>> {
    let text = read_text(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let manifest = CorpusManifest::parse(&text)?.resolved(base);
    manifest
        .entries
        .iter()
        .map(|entry| {
            let score = load_score_path(&entry.score_path)?;
            let audio = load_audio_path(&entry.audio_path)?;
            let features = extract_piece_features(&score, &audio)?;
            Ok((entry.emt.clone(), normalize_recording(&features)))
        })
        .collect()
}
