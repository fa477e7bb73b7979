//! `.adderc` compressed container: raw header plus length-prefixed ADU records.

use rayon::prelude::*;
use thiserror::Error;

use super::adu::{build_adus, decode_adu, encode_adu, AduError, CubeGrid, InterParams};
use crate::event::{sort_by_time, Event};
use crate::stream::{read_all, write_stream, StreamError, StreamHeader, HEADER_LEN};

pub const MAGIC: [u8; 4] = *b"ADRC";
pub const VERSION: u8 = 1;
/// Magic, version, raw header, ADU span.
pub const PREAMBLE_LEN: usize = 4 + 1 + HEADER_LEN + 4;
/// Payload length, start tick, event count.
pub const RECORD_HEADER_LEN: usize = 12;

/// Errors raised by the compressed container.
#[derive(Error, Debug)]
pub enum CodecError {
    /// Container magic mismatch
    #[error("not a compressed stream")]
    BadMagic,

    /// Container version this build cannot decode
    #[error("unsupported compressed stream version {0}")]
    UnsupportedVersion(u8),

    /// Embedded raw header failed to parse
    #[error("embedded header: {0}")]
    Header(#[from] StreamError),

    /// Input ended inside the preamble
    #[error("compressed stream truncated in preamble")]
    Truncated,

    /// Zero-length ADU span in the preamble
    #[error("ADU span must be positive")]
    ZeroSpan,

    /// ADU payload failed to decode
    #[error("ADU {index}: {source}")]
    Adu { index: usize, source: AduError },

    /// Decoded event count disagrees with the record header
    #[error("ADU {index}: expected {expected} events, decoded {got}")]
    CountMismatch { index: usize, expected: u32, got: usize },

    /// ADU index past the end of the stream
    #[error("ADU {0} does not exist")]
    NoSuchAdu(usize),
}

/// Compression settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompressParams {
    /// ADU window; defaults to the stream's Δt_max.
    pub adu_span: Option<u32>,
    /// Intensity tolerance for time quantization; zero is lossless.
    pub m_max: u8,
}

impl CompressParams {
    pub const LOSSLESS: Self = Self { adu_span: None, m_max: 0 };
}

/// Location of one ADU record.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AduRecord {
    pub offset: usize,
    pub payload_len: usize,
    pub start_t: u32,
    pub event_count: u32,
}

/// Result of decoding a compressed stream.
#[derive(Clone, Debug, PartialEq)]
pub struct Decompressed {
    pub header: StreamHeader,
    pub adu_span: u32,
    pub events: Vec<Event>,
    /// Set when trailing bytes did not form a complete ADU record.
    pub truncated: bool,
}

/// Compresses events. Events are put in canonical stream order first, so per-pixel order
/// is kept but cross-pixel interleaving is normalized.
pub fn compress_events(header: &StreamHeader, events: &[Event], params: CompressParams) -> Vec<u8> {
    let span = params.adu_span.unwrap_or(header.plane.dt_max).max(1);
    let grid = CubeGrid::new(&header.plane);
    let mut sorted = events.to_vec();
    sort_by_time(&mut sorted);
    let adus = build_adus(&sorted, &grid, span);
    let inter = InterParams { dt_ref: header.plane.dt_ref, m_max: params.m_max };
    let payloads: Vec<Vec<u8>> = adus.par_iter().map(|adu| encode_adu(adu, &grid, inter)).collect();

    let mut out = Vec::with_capacity(PREAMBLE_LEN + payloads.iter().map(|p| p.len() + RECORD_HEADER_LEN).sum::<usize>());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&header.to_bytes());
    out.extend_from_slice(&span.to_le_bytes());
    for (adu, payload) in adus.iter().zip(&payloads) {
        out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&adu.start_t.to_le_bytes());
        out.extend_from_slice(&(adu.event_count() as u32).to_le_bytes());
        out.extend_from_slice(payload);
    }
    out
}

/// Compresses a raw `.adder` byte stream.
pub fn compress_stream(raw: &[u8], params: CompressParams) -> Result<Vec<u8>, CodecError> {
    let (header, events) = read_all(raw)?;
    Ok(compress_events(&header, &events, params))
}

/// Parses the preamble and lists ADU records; stops at the first incomplete record.
pub fn adu_index(bytes: &[u8]) -> Result<(StreamHeader, u32, Vec<AduRecord>, bool), CodecError> {
    if bytes.len() < 5 {
        return Err(CodecError::Truncated);
    }
    if bytes[0..4] != MAGIC {
        return Err(CodecError::BadMagic);
    }
    if bytes[4] != VERSION {
        return Err(CodecError::UnsupportedVersion(bytes[4]));
    }
    if bytes.len() < PREAMBLE_LEN {
        return Err(CodecError::Truncated);
    }
    let header = StreamHeader::from_bytes(&bytes[5..5 + HEADER_LEN])?;
    let span = u32::from_le_bytes(bytes[5 + HEADER_LEN..PREAMBLE_LEN].try_into().unwrap());
    if span == 0 {
        return Err(CodecError::ZeroSpan);
    }
    let mut records = Vec::new();
    let mut pos = PREAMBLE_LEN;
    let mut truncated = false;
    while pos < bytes.len() {
        if pos + RECORD_HEADER_LEN > bytes.len() {
            truncated = true;
            break;
        }
        let word = |i: usize| u32::from_le_bytes(bytes[pos + i..pos + i + 4].try_into().unwrap());
        let (len, start_t, count) = (word(0) as usize, word(4), word(8));
        let offset = pos + RECORD_HEADER_LEN;
        if offset + len > bytes.len() {
            truncated = true;
            break;
        }
        records.push(AduRecord { offset, payload_len: len, start_t, event_count: count });
        pos = offset + len;
    }
    Ok((header, span, records, truncated))
}

fn decode_record(bytes: &[u8], grid: &CubeGrid, span: u32, index: usize, rec: &AduRecord) -> Result<Vec<Event>, CodecError> {
    let payload = &bytes[rec.offset..rec.offset + rec.payload_len];
    let adu = decode_adu(payload, grid, rec.start_t, span).map_err(|source| CodecError::Adu { index, source })?;
    let events = adu.events();
    if events.len() != rec.event_count as usize {
        return Err(CodecError::CountMismatch { index, expected: rec.event_count, got: events.len() });
    }
    Ok(events)
}

/// Decodes ADUs starting at record `first` without touching earlier records.
pub fn decompress_from(bytes: &[u8], first: usize) -> Result<Decompressed, CodecError> {
    let (header, span, records, truncated) = adu_index(bytes)?;
    if first > records.len() {
        return Err(CodecError::NoSuchAdu(first));
    }
    let grid = CubeGrid::new(&header.plane);
    let decoded: Vec<Vec<Event>> = records[first..]
        .par_iter()
        .enumerate()
        .map(|(i, rec)| decode_record(bytes, &grid, span, first + i, rec))
        .collect::<Result<_, _>>()?;
    Ok(Decompressed { header, adu_span: span, events: decoded.concat(), truncated })
}

/// Decodes a whole compressed stream.
pub fn decompress(bytes: &[u8]) -> Result<Decompressed, CodecError> {
    decompress_from(bytes, 0)
}

/// Decodes a compressed stream back into raw `.adder` bytes.
pub fn decompress_stream(bytes: &[u8]) -> Result<(Vec<u8>, bool), CodecError> {
    let d = decompress(bytes)?;
    Ok((write_stream(&d.header, &d.events), d.truncated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{PixelMode, PlaneParams, SourceKind, D_FILLER};

    fn header() -> StreamHeader {
        StreamHeader::new(
            PlaneParams { width: 20, height: 10, channels: 1, dt_s: 7650, dt_ref: 255, dt_max: 500, source_kind: SourceKind::Framed },
            PixelMode::Collapse,
        )
    }

    fn events() -> Vec<Event> {
        let mut v = Vec::new();
        for y in 0..10u16 {
            for x in 0..20u16 {
                let mut t = (x as u32 * 13 + y as u32 * 7) % 200;
                for k in 0..6u32 {
                    t += 150 + (k * 37 + x as u32) % 300;
                    v.push(Event::new(x, y, 0, 6 + (k % 3) as u8, t));
                }
                v.push(Event::new(x, y, 0, D_FILLER, t + 10));
            }
        }
        v
    }

    fn by_time(mut v: Vec<Event>) -> Vec<Event> {
        sort_by_time(&mut v);
        v
    }

    #[test]
    fn lossless_identity() {
        let ev = events();
        let bytes = compress_events(&header(), &ev, CompressParams::LOSSLESS);
        let d = decompress(&bytes).unwrap();
        assert!(!d.truncated);
        assert_eq!(d.header, header());
        assert_eq!(d.events, by_time(ev));
    }

    #[test]
    fn raw_round_trip_and_size() {
        let ev = events();
        let raw = write_stream(&header(), &ev);
        let c = compress_stream(&raw, CompressParams::LOSSLESS).unwrap();
        assert!(c.len() < raw.len());
        let (back, truncated) = decompress_stream(&c).unwrap();
        assert!(!truncated);
        assert_eq!(read_all(&back).unwrap().1, by_time(ev));
    }

    #[test]
    fn seek_matches_full_decode() {
        let ev = events();
        let bytes = compress_events(&header(), &ev, CompressParams::LOSSLESS);
        let full = decompress(&bytes).unwrap().events;
        let (_, span, records, _) = adu_index(&bytes).unwrap();
        assert!(records.len() > 1);
        for (k, rec) in records.iter().enumerate() {
            let tail = decompress_from(&bytes, k).unwrap().events;
            let expect: Vec<Event> = full.iter().filter(|e| e.t >= rec.start_t).copied().collect();
            assert_eq!(tail, expect);
            assert_eq!(rec.start_t % span, 0);
        }
    }

    #[test]
    fn truncated_stops_at_last_complete_adu() {
        let bytes = compress_events(&header(), &events(), CompressParams::LOSSLESS);
        let (_, _, records, _) = adu_index(&bytes).unwrap();
        let cut = records[2].offset + records[2].payload_len / 2;
        let d = decompress(&bytes[..cut]).unwrap();
        assert!(d.truncated);
        let full = decompress(&bytes).unwrap().events;
        let expect: Vec<Event> = full.iter().filter(|e| e.t < records[2].start_t).copied().collect();
        assert_eq!(d.events, expect);
    }

    #[test]
    fn bad_preamble() {
        assert!(matches!(decompress(b"NOPE1"), Err(CodecError::BadMagic)));
        let mut bytes = compress_events(&header(), &[], CompressParams::LOSSLESS);
        assert_eq!(bytes.len(), PREAMBLE_LEN);
        assert!(decompress(&bytes).unwrap().events.is_empty());
        bytes[4] = 9;
        assert!(matches!(decompress(&bytes), Err(CodecError::UnsupportedVersion(9))));
    }
}
