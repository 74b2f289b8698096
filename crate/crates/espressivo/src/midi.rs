//! Standard MIDI File (format 0/1) reading and writing.
//!
//! Reading honors the tempo map (set-tempo meta events from any track) and
//! converts ticks to absolute seconds. Exactly one track may contain note
//! events; a note-on is closed by the next note-off (or zero-velocity
//! note-on) of the same pitch in arrival order, so legato overlap between
//! notes at distinct ticks survives a round trip. Chords — two note-ons on
//! the same tick — are rejected: the downstream timing model assumes a
//! single melodic stream.
//!
//! Writing emits a format-0 file at 960 ticks per quarter and a fixed
//! 120 BPM tempo; quantization error is at most half a tick, well inside
//! the 1/960-quarter round-trip tolerance. Articulation and dynamic marks
//! cannot be represented and are dropped.

use std::collections::VecDeque;

use crate::score::{NoteEvent, Score, SourceKind};
use crate::{Error, Result};

/// Tick resolution used by [`write_midi`].
pub const WRITE_TICKS_PER_QUARTER: u16 = 960;

const DEFAULT_TEMPO_USPQ: u32 = 500_000; // 120 BPM

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Reader { data, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Midi(format!(
                "unexpected end of file at byte {} (wanted {n} more)",
                self.pos
            )));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    /// Variable-length quantity, at most four bytes.
    fn vlq(&mut self) -> Result<u32> {
        let mut value: u32 = 0;
        for _ in 0..4 {
            let byte = self.u8()?;
            value = (value << 7) | u32::from(byte & 0x7f);
            if byte & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(Error::Midi(format!("variable-length quantity too long at byte {}", self.pos)))
    }
}

/// Piecewise-constant tempo map: (tick, microseconds per quarter).
struct TempoMap {
    /// Sorted by tick; first entry is at tick 0. `seconds` caches the
    /// absolute time of each change point.
    changes: Vec<(u64, u32, f64)>,
    ticks_per_quarter: f64,
}

impl TempoMap {
    fn new(mut raw: Vec<(u64, u32)>, ticks_per_quarter: u16) -> Self {
        raw.sort_by_key(|&(tick, _)| tick);
        let tpq = f64::from(ticks_per_quarter);
        let mut changes: Vec<(u64, u32, f64)> = vec![(0, DEFAULT_TEMPO_USPQ, 0.0)];
        for (tick, uspq) in raw {
            let &(last_tick, last_uspq, last_sec) = changes.last().unwrap();
            if tick == last_tick {
                // Later event at the same tick wins.
                *changes.last_mut().unwrap() = (tick, uspq, last_sec);
            } else {
                let sec = last_sec + (tick - last_tick) as f64 * f64::from(last_uspq) / 1e6 / tpq;
                changes.push((tick, uspq, sec));
            }
        }
        TempoMap {
            changes,
            ticks_per_quarter: tpq,
        }
    }

    fn seconds_at(&self, tick: u64) -> f64 {
        let idx = match self.changes.binary_search_by_key(&tick, |&(t, _, _)| t) {
            Ok(i) => i,
            Err(i) => i - 1, // i >= 1 because changes[0].0 == 0
        };
        let (seg_tick, uspq, seg_sec) = self.changes[idx];
        seg_sec + (tick - seg_tick) as f64 * f64::from(uspq) / 1e6 / self.ticks_per_quarter
    }
}

struct RawNote {
    pitch: u8,
    on_tick: u64,
    off_tick: u64,
}

#[derive(Default)]
struct TrackEvents {
    notes: Vec<RawNote>,
    tempos: Vec<(u64, u32)>,
}

/// Parse a Standard MIDI File into a [`Score`].
pub fn parse_midi(bytes: &[u8]) -> Result<Score> {
    let mut r = Reader::new(bytes);

    if r.take(4)? != b"MThd" {
        return Err(Error::Midi("missing MThd header chunk".into()));
    }
    let header_len = r.u32()?;
    if header_len < 6 {
        return Err(Error::Midi(format!("header chunk length {header_len} < 6")));
    }
    let format = r.u16()?;
    if format > 1 {
        return Err(Error::Midi(format!("unsupported SMF format {format} (want 0 or 1)")));
    }
    let ntrks = r.u16()?;
    let division = r.u16()?;
    if division & 0x8000 != 0 {
        return Err(Error::Midi("SMPTE time division is not supported".into()));
    }
    if division == 0 {
        return Err(Error::Midi("zero ticks per quarter".into()));
    }
    r.take(header_len as usize - 6)?;

    let mut tempos: Vec<(u64, u32)> = Vec::new();
    let mut melodic: Option<TrackEvents> = None;
    for _ in 0..ntrks {
        let track = parse_track(&mut r)?;
        tempos.extend_from_slice(&track.tempos);
        if !track.notes.is_empty() {
            if melodic.is_some() {
                return Err(Error::Midi("more than one track contains notes".into()));
            }
            melodic = Some(track);
        }
    }
    let melodic = melodic.ok_or_else(|| Error::Midi("no notes".into()))?;

    let tempo_map = TempoMap::new(tempos, division);
    let notes = melodic
        .notes
        .iter()
        .map(|n| {
            NoteEvent::new(
                n.pitch,
                tempo_map.seconds_at(n.on_tick),
                tempo_map.seconds_at(n.off_tick),
                (n.off_tick - n.on_tick) as f64 / f64::from(division),
            )
        })
        .collect();
    Score::new(notes, division, SourceKind::Midi)
}

fn parse_track(r: &mut Reader) -> Result<TrackEvents> {
    if r.take(4)? != b"MTrk" {
        return Err(Error::Midi(format!("missing MTrk chunk at byte {}", r.pos - 4)));
    }
    let len = r.u32()? as usize;
    let end = r.pos + len;
    if end > r.data.len() {
        return Err(Error::Midi(format!("track chunk length {len} overruns file")));
    }

    let mut ev = TrackEvents::default();
    let mut tick: u64 = 0;
    let mut running_status: Option<u8> = None;
    // Open note-ons per pitch, FIFO so legato overlap pairs correctly.
    let mut open: Vec<VecDeque<u64>> = vec![VecDeque::new(); 128];
    let mut last_on_tick: Option<u64> = None;
    let mut open_count = 0usize;

    while r.pos < end {
        tick += u64::from(r.vlq()?);
        let first = r.u8()?;
        let status = if first & 0x80 != 0 {
            if first < 0xf0 {
                running_status = Some(first);
            }
            first
        } else {
            r.pos -= 1;
            running_status
                .ok_or_else(|| Error::Midi(format!("data byte {first:#04x} without running status at byte {}", r.pos)))?
        };

        match status {
            0xff => {
                let meta_type = r.u8()?;
                let len = r.vlq()? as usize;
                let data = r.take(len)?;
                if meta_type == 0x51 {
                    if data.len() != 3 {
                        return Err(Error::Midi(format!("set-tempo meta event of length {len}")));
                    }
                    let uspq = u32::from(data[0]) << 16 | u32::from(data[1]) << 8 | u32::from(data[2]);
                    ev.tempos.push((tick, uspq));
                }
            }
            0xf0 | 0xf7 => {
                let len = r.vlq()? as usize;
                r.take(len)?;
            }
            _ => {
                let kind = status & 0xf0;
                match kind {
                    0x90 => {
                        let pitch = r.u8()? & 0x7f;
                        let velocity = r.u8()? & 0x7f;
                        if velocity > 0 {
                            if last_on_tick == Some(tick) {
                                return Err(Error::Midi(format!("simultaneous notes at tick {tick}")));
                            }
                            last_on_tick = Some(tick);
                            open[usize::from(pitch)].push_back(tick);
                            open_count += 1;
                        } else {
                            close_note(&mut ev, &mut open, &mut open_count, pitch, tick)?;
                        }
                    }
                    0x80 => {
                        let pitch = r.u8()? & 0x7f;
                        let _velocity = r.u8()?;
                        close_note(&mut ev, &mut open, &mut open_count, pitch, tick)?;
                    }
                    0xa0 | 0xb0 | 0xe0 => {
                        r.take(2)?;
                    }
                    0xc0 | 0xd0 => {
                        r.take(1)?;
                    }
                    _ => {
                        return Err(Error::Midi(format!("unexpected status byte {status:#04x} at byte {}", r.pos)));
                    }
                }
            }
        }
    }

    if open_count > 0 {
        let (pitch, &on_tick) = open
            .iter()
            .enumerate()
            .find_map(|(p, q)| q.front().map(|t| (p, t)))
            .expect("open_count > 0");
        return Err(Error::Midi(format!("unmatched note-on (pitch {pitch}) at tick {on_tick}")));
    }
    ev.notes.sort_by_key(|n| n.on_tick);
    Ok(ev)
}

fn close_note(
    ev: &mut TrackEvents,
    open: &mut [VecDeque<u64>],
    open_count: &mut usize,
    pitch: u8,
    tick: u64,
) -> Result<()> {
    let on_tick = open[usize::from(pitch)]
        .pop_front()
        .ok_or_else(|| Error::Midi(format!("unmatched note-off (pitch {pitch}) at tick {tick}")))?;
    *open_count -= 1;
    if tick == on_tick {
        return Err(Error::Midi(format!("zero-length note (pitch {pitch}) at tick {tick}")));
    }
    ev.notes.push(RawNote {
        pitch,
        on_tick,
        off_tick: tick,
    });
    Ok(())
}

fn push_vlq(out: &mut Vec<u8>, mut value: u64) {
    let mut stack = [0u8; 10];
    let mut n = 0;
    loop {
        stack[n] = (value & 0x7f) as u8;
        value >>= 7;
        n += 1;
        if value == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        let mut byte = stack[i];
        if i > 0 {
            byte |= 0x80;
        }
        out.push(byte);
    }
}

/// Serialize a [`Score`] as a format-0 SMF.
///
/// Same-pitch legato overlap is truncated to the next onset so the
/// note-on/note-off pairing stays unambiguous; overlap between distinct
/// pitches is written as-is.
pub fn write_midi(score: &Score) -> Vec<u8> {
    let ticks_per_sec = 2.0 * f64::from(WRITE_TICKS_PER_QUARTER); // 120 BPM
    let notes = score.notes();

    let mut on_ticks = Vec::with_capacity(notes.len());
    let mut prev_on: Option<u64> = None;
    for note in notes {
        let mut t = (note.onset * ticks_per_sec).round() as u64;
        if let Some(p) = prev_on {
            t = t.max(p + 1); // strict onset order survives quantization
        }
        prev_on = Some(t);
        on_ticks.push(t);
    }

    // (tick, order) with note-offs before note-ons at equal ticks.
    let mut events: Vec<(u64, u8, [u8; 3])> = Vec::with_capacity(notes.len() * 2);
    for (k, note) in notes.iter().enumerate() {
        let on = on_ticks[k];
        let mut off = ((note.offset * ticks_per_sec).round() as u64).max(on + 1);
        if let Some(next) = notes.get(k + 1) {
            if next.pitch == note.pitch {
                off = off.min(on_ticks[k + 1]).max(on + 1);
            }
        }
        events.push((on, 1, [0x90, note.pitch, 0x60]));
        events.push((off, 0, [0x80, note.pitch, 0x00]));
    }
    events.sort_by_key(|&(tick, order, _)| (tick, order));

    let mut track = Vec::new();
    push_vlq(&mut track, 0);
    track.extend_from_slice(&[0xff, 0x51, 0x03]);
    track.extend_from_slice(&DEFAULT_TEMPO_USPQ.to_be_bytes()[1..]);
    let mut cursor = 0u64;
    for (tick, _, msg) in events {
        push_vlq(&mut track, tick - cursor);
        cursor = tick;
        track.extend_from_slice(&msg);
    }
    push_vlq(&mut track, 0);
    track.extend_from_slice(&[0xff, 0x2f, 0x00]);

    let mut out = Vec::with_capacity(track.len() + 22);
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&WRITE_TICKS_PER_QUARTER.to_be_bytes());
    out.extend_from_slice(b"MTrk");
    out.extend_from_slice(&(track.len() as u32).to_be_bytes());
    out.extend_from_slice(&track);
    out
}
