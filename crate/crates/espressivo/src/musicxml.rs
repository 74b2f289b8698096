//! MusicXML score-partwise parsing.
//!
//! Supports the subset needed for a monophonic violin line: `note`,
//! `pitch`, `duration`, `rest`, `divisions`, articulations (staccato,
//! accent, strong-accent as marcato, tenuto), slurs (legato on covered
//! notes except the terminus), dynamics (`ppp`..`fff`, whether written as
//! a direction or inside notations), tempo directions, and ties (merged
//! into one sounding note). Everything else is skipped; unrecognized
//! dynamics log a warning and leave the field empty.

use roxmltree::{Document, Node};

use crate::score::{Articulation, Dynamic, NoteEvent, Score, SourceKind};
use crate::{Error, Result};

const DEFAULT_SEC_PER_BEAT: f64 = 0.5; // 120 BPM when the score names no tempo

/// Parse a MusicXML `score-partwise` document with a single part.
pub fn parse_musicxml(text: &str) -> Result<Score> {
    let doc = Document::parse(text).map_err(|e| Error::MusicXml(format!("not well-formed: {e}")))?;
    let root = doc.root_element();
    if root.tag_name().name() != "score-partwise" {
        return Err(Error::MusicXml(format!(
            "unsupported document element <{}> (want score-partwise)",
            root.tag_name().name()
        )));
    }

    let parts: Vec<Node> = root.children().filter(|n| n.has_tag_name("part")).collect();
    if parts.len() > 1 {
        return Err(Error::MusicXml(format!("unsupported multi-part score ({} parts)", parts.len())));
    }
    let part = parts
        .into_iter()
        .next()
        .ok_or_else(|| Error::MusicXml("no part element".into()))?;

    let mut p = PartParser::default();
    for measure in part.children().filter(|n| n.has_tag_name("measure")) {
        for element in measure.children().filter(Node::is_element) {
            match element.tag_name().name() {
                "attributes" => p.attributes(&element)?,
                "direction" => p.direction(&element),
                "sound" => p.sound(&element),
                "note" => p.note(&element)?,
                _ => {}
            }
        }
    }
    p.finish_slur();
    Score::new(p.notes, 960, SourceKind::MusicXml)
}

#[derive(Default)]
struct PartParser {
    notes: Vec<NoteEvent>,
    divisions: Option<f64>,
    sec_per_beat: Option<f64>,
    cursor_seconds: f64,
    pending_dynamic: Option<Dynamic>,
    /// Index of the first note under the active slur, if any.
    slur_start: Option<usize>,
    /// Index of the note an open tie started on.
    open_tie: Option<usize>,
}

impl PartParser {
    fn sec_per_beat(&self) -> f64 {
        self.sec_per_beat.unwrap_or(DEFAULT_SEC_PER_BEAT)
    }

    fn attributes(&mut self, node: &Node) -> Result<()> {
        if let Some(div) = child_text(node, "divisions") {
            let value: f64 = div
                .trim()
                .parse()
                .map_err(|_| Error::MusicXml(format!("bad divisions value `{div}`")))?;
            if value <= 0.0 {
                return Err(Error::MusicXml(format!("divisions must be positive, got {value}")));
            }
            self.divisions = Some(value);
        }
        Ok(())
    }

    fn direction(&mut self, node: &Node) {
        for dt in node.children().filter(|n| n.has_tag_name("direction-type")) {
            for dyns in dt.children().filter(|n| n.has_tag_name("dynamics")) {
                self.dynamics(&dyns);
            }
        }
        if let Some(sound) = node.children().find(|n| n.has_tag_name("sound")) {
            self.sound(&sound);
        }
    }

    fn sound(&mut self, node: &Node) {
        if let Some(tempo) = node.attribute("tempo") {
            match tempo.trim().parse::<f64>() {
                Ok(bpm) if bpm > 0.0 => self.sec_per_beat = Some(60.0 / bpm),
                _ => log::warn!("ignoring unparseable tempo attribute `{tempo}`"),
            }
        }
    }

    fn dynamics(&mut self, node: &Node) {
        for child in node.children().filter(Node::is_element) {
            let name = child.tag_name().name();
            match Dynamic::from_name(name) {
                Some(d) => self.pending_dynamic = Some(d),
                None => log::warn!("unrecognized dynamic marking `{name}`, leaving note unmarked"),
            }
        }
    }

    fn note(&mut self, node: &Node) -> Result<()> {
        if node.children().any(|n| n.has_tag_name("grace")) {
            log::warn!("skipping grace note");
            return Ok(());
        }
        if node.children().any(|n| n.has_tag_name("chord")) {
            return Err(Error::MusicXml("chord notes are not supported (monophonic line)".into()));
        }

        let divisions = self
            .divisions
            .ok_or_else(|| Error::MusicXml("missing divisions before first duration".into()))?;
        let duration_div = child_text(node, "duration")
            .ok_or_else(|| Error::MusicXml("note without duration".into()))?
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::MusicXml("bad duration value".into()))?;
        if duration_div <= 0.0 {
            return Err(Error::MusicXml(format!("duration must be positive, got {duration_div}")));
        }
        let beats = duration_div / divisions;
        let dur_seconds = beats * self.sec_per_beat();
        let onset = self.cursor_seconds;
        self.cursor_seconds += dur_seconds;

        if node.children().any(|n| n.has_tag_name("rest")) {
            return Ok(());
        }

        let pitch_node = node
            .children()
            .find(|n| n.has_tag_name("pitch"))
            .ok_or_else(|| Error::MusicXml("note without pitch or rest".into()))?;
        let pitch = parse_pitch(&pitch_node)?;

        let (tie_start, tie_stop) = node
            .children()
            .filter(|n| n.has_tag_name("tie"))
            .fold((false, false), |(s, e), tie| match tie.attribute("type") {
                Some("start") => (true, e),
                Some("stop") => (s, true),
                _ => (s, e),
            });

        // A tie continuation extends the open note instead of creating one.
        if tie_stop {
            if let Some(idx) = self.open_tie {
                if self.notes[idx].pitch == pitch {
                    self.notes[idx].offset += dur_seconds;
                    self.notes[idx].note_value += beats;
                    if !tie_start {
                        self.open_tie = None;
                    }
                    return Ok(());
                }
            }
            log::warn!("tie stop without matching start; treating note as untied");
        }

        let mut note = NoteEvent::new(pitch, onset, onset + dur_seconds, beats);
        note.dynamic = self.pending_dynamic.take();

        if let Some(notations) = node.children().find(|n| n.has_tag_name("notations")) {
            for child in notations.children().filter(Node::is_element) {
                match child.tag_name().name() {
                    "articulations" => {
                        if let Some(a) = parse_articulations(&child) {
                            note.articulation = Some(a);
                        }
                    }
                    "dynamics" => {
                        self.dynamics(&child);
                        note.dynamic = self.pending_dynamic.take();
                    }
                    "slur" => match child.attribute("type") {
                        Some("start") => {
                            if self.slur_start.is_none() {
                                self.slur_start = Some(self.notes.len());
                            }
                        }
                        Some("stop") => {
                            // Covered notes get legato; the terminus
                            // re-articulates and is left unmarked.
                            if let Some(start) = self.slur_start.take() {
                                for covered in &mut self.notes[start..] {
                                    if covered.articulation.is_none() {
                                        covered.articulation = Some(Articulation::Legato);
                                    }
                                }
                            }
                        }
                        _ => {}
                    },
                    _ => {}
                }
            }
        }

        let idx = self.notes.len();
        self.notes.push(note);
        self.open_tie = if tie_start { Some(idx) } else { None };
        Ok(())
    }

    fn finish_slur(&mut self) {
        // An unterminated slur covers everything up to (not including) the
        // final note.
        if let Some(start) = self.slur_start.take() {
            let end = self.notes.len().saturating_sub(1);
            for covered in &mut self.notes[start..end] {
                if covered.articulation.is_none() {
                    covered.articulation = Some(Articulation::Legato);
                }
            }
        }
    }
}

fn child_text<'a>(node: &'a Node, name: &str) -> Option<&'a str> {
    node.children().find(|n| n.has_tag_name(name)).and_then(|n| n.text())
}

fn parse_pitch(node: &Node) -> Result<u8> {
    let step = child_text(node, "step")
        .map(str::trim)
        .ok_or_else(|| Error::MusicXml("pitch without step".into()))?;
    let semitone: i32 = match step {
        "C" => 0,
        "D" => 2,
        "E" => 4,
        "F" => 5,
        "G" => 7,
        "A" => 9,
        "B" => 11,
        other => return Err(Error::MusicXml(format!("unknown pitch step `{other}`"))),
    };
    let alter: i32 = match child_text(node, "alter") {
        Some(text) => text
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::MusicXml("bad alter value".into()))? as i32,
        None => 0,
    };
    let octave: i32 = child_text(node, "octave")
        .ok_or_else(|| Error::MusicXml("pitch without octave".into()))?
        .trim()
        .parse()
        .map_err(|_| Error::MusicXml("bad octave value".into()))?;
    let midi = (octave + 1) * 12 + semitone + alter;
    u8::try_from(midi).ok().filter(|&p| p <= 127).ok_or_else(|| {
        Error::MusicXml(format!("pitch {step}{octave} (alter {alter}) outside MIDI range"))
    })
}

fn parse_articulations(node: &Node) -> Option<Articulation> {
    for child in node.children().filter(Node::is_element) {
        let mapped = match child.tag_name().name() {
            "staccato" => Some(Articulation::Staccato),
            "accent" => Some(Articulation::Accent),
            "strong-accent" => Some(Articulation::Marcato),
            "tenuto" => Some(Articulation::Tenuto),
            _ => None,
        };
        if mapped.is_some() {
            return mapped;
        }
    }
    None
}
