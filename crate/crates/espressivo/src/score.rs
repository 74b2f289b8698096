//! Canonical score representation shared by every pipeline stage.
//!
//! A [`Score`] is a validated, monophonic sequence of [`NoteEvent`]s with
//! absolute timing in seconds and symbolic note values in beats. Parsers
//! ([`crate::midi`], [`crate::musicxml`]) produce it, the timing and
//! synthesis stages consume it.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Articulation symbols we understand from MusicXML notations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Articulation {
    Staccato,
    Accent,
    Marcato,
    Tenuto,
    Legato,
}

impl Articulation {
    pub const ALL: [Articulation; 5] = [
        Articulation::Staccato,
        Articulation::Accent,
        Articulation::Marcato,
        Articulation::Tenuto,
        Articulation::Legato,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Articulation::Staccato => "staccato",
            Articulation::Accent => "accent",
            Articulation::Marcato => "marcato",
            Articulation::Tenuto => "tenuto",
            Articulation::Legato => "legato",
        }
    }
}

/// Dynamic markings from ppp to fff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dynamic {
    Ppp,
    Pp,
    P,
    Mp,
    Mf,
    F,
    Ff,
    Fff,
}

impl Dynamic {
    pub const ALL: [Dynamic; 8] = [
        Dynamic::Ppp,
        Dynamic::Pp,
        Dynamic::P,
        Dynamic::Mp,
        Dynamic::Mf,
        Dynamic::F,
        Dynamic::Ff,
        Dynamic::Fff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dynamic::Ppp => "ppp",
            Dynamic::Pp => "pp",
            Dynamic::P => "p",
            Dynamic::Mp => "mp",
            Dynamic::Mf => "mf",
            Dynamic::F => "f",
            Dynamic::Ff => "ff",
            Dynamic::Fff => "fff",
        }
    }

    /// Parse a MusicXML dynamics element name.
    pub fn from_name(name: &str) -> Option<Dynamic> {
        Dynamic::ALL.into_iter().find(|d| d.name() == name)
    }
}

/// One sounding note: absolute timing in seconds plus its symbolic value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoteEvent {
    /// MIDI note number, 0-127.
    pub pitch: u8,
    /// Onset time in seconds.
    pub onset: f64,
    /// Offset time in seconds; always greater than `onset`.
    pub offset: f64,
    /// Symbolic length in beats (quarter note = 1).
    pub note_value: f64,
    /// Articulation symbol, MusicXML sources only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub articulation: Option<Articulation>,
    /// Dynamic marking, MusicXML sources only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamic: Option<Dynamic>,
}

impl NoteEvent {
    /// Plain note without markings.
    pub fn new(pitch: u8, onset: f64, offset: f64, note_value: f64) -> Self {
        NoteEvent {
            pitch,
            onset,
            offset,
            note_value,
            articulation: None,
            dynamic: None,
        }
    }

    /// Sounding duration in seconds.
    pub fn duration(&self) -> f64 {
        self.offset - self.onset
    }
}

/// Where a score came from. MIDI scores can never carry articulation or
/// dynamic marks; MusicXML scores may.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Midi,
    MusicXml,
}

/// Validated monophonic score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    notes: Vec<NoteEvent>,
    ticks_per_quarter: u16,
    source_kind: SourceKind,
}

/// Schema version of the canonical score document.
pub const SCORE_DOC_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ScoreDoc {
    version: u32,
    #[serde(flatten)]
    score: Score,
}

impl Score {
    /// Build a score, enforcing the representation invariants:
    /// non-empty, strictly increasing onsets, `offset > onset`,
    /// `note_value > 0`, pitch in 0-127, and marks only on MusicXML sources.
    pub fn new(notes: Vec<NoteEvent>, ticks_per_quarter: u16, source_kind: SourceKind) -> Result<Self> {
        if notes.is_empty() {
            return Err(Error::Score("no notes".into()));
        }
        for (k, note) in notes.iter().enumerate() {
            if note.pitch > 127 {
                return Err(Error::Score(format!("note {k}: pitch {} out of range", note.pitch)));
            }
            if !note.onset.is_finite() || !note.offset.is_finite() || note.offset <= note.onset {
                return Err(Error::Score(format!(
                    "note {k}: offset {} not after onset {}",
                    note.offset, note.onset
                )));
            }
            if !note.note_value.is_finite() || note.note_value <= 0.0 {
                return Err(Error::Score(format!("note {k}: note value {} not positive", note.note_value)));
            }
            if k > 0 && note.onset <= notes[k - 1].onset {
                return Err(Error::Score(format!(
                    "note {k}: onset {} does not increase past {}",
                    note.onset,
                    notes[k - 1].onset
                )));
            }
            if source_kind == SourceKind::Midi && (note.articulation.is_some() || note.dynamic.is_some()) {
                return Err(Error::Score(format!("note {k}: MIDI scores cannot carry markings")));
            }
        }
        Ok(Score {
            notes,
            ticks_per_quarter,
            source_kind,
        })
    }

    pub fn notes(&self) -> &[NoteEvent] {
        &self.notes
    }

    pub fn len(&self) -> usize {
        self.notes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.notes.is_empty()
    }

    pub fn ticks_per_quarter(&self) -> u16 {
        self.ticks_per_quarter
    }

    pub fn source_kind(&self) -> SourceKind {
        self.source_kind
    }

    /// Rebuild with a per-note timing rewrite, revalidating invariants.
    pub fn with_timing(&self, timing: impl Fn(usize, &NoteEvent) -> (f64, f64)) -> Result<Score> {
        let notes = self
            .notes
            .iter()
            .enumerate()
            .map(|(k, n)| {
                let (onset, offset) = timing(k, n);
                NoteEvent { onset, offset, ..n.clone() }
            })
            .collect();
        Score::new(notes, self.ticks_per_quarter, self.source_kind)
    }

    /// Serialize to the canonical score document (versioned JSON, one
    /// object per note). This is what the CLI `--dump-score` flag emits.
    pub fn to_canonical_json(&self) -> String {
        let doc = ScoreDoc {
            version: SCORE_DOC_VERSION,
            score: self.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("score serialization cannot fail")
    }

    /// Parse the canonical score document.
    pub fn from_canonical_json(text: &str) -> Result<Score> {
        let doc: ScoreDoc =
            serde_json::from_str(text).map_err(|e| Error::Score(format!("bad score document: {e}")))?;
        if doc.version != SCORE_DOC_VERSION {
            return Err(Error::Score(format!(
                "unsupported score document version {}",
                doc.version
            )));
        }
        // Round-tripped documents re-enter through the full validation.
        Score::new(doc.score.notes, doc.score.ticks_per_quarter, doc.score.source_kind)
    }
}
