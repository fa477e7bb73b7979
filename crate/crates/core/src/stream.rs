//! Raw `.adder` container: fixed header followed by packed events.

use std::collections::HashMap;
use std::io::{self, Read, Write};

use thiserror::Error;

use crate::event::{Event, PixelMode, PlaneParams, SourceKind, D_MAX};

pub const MAGIC: [u8; 4] = *b"ADDR";
pub const VERSION: u8 = 2;
pub const HEADER_LEN: usize = 26;
pub const ENDIAN_LITTLE: u8 = 0;

/// Errors raised while reading or writing raw streams.
#[derive(Error, Debug)]
pub enum StreamError {
    /// The first four bytes are not the stream magic
    #[error("bad magic bytes {0:?}")]
    BadMagic([u8; 4]),

    /// Header declares a version this reader cannot decode
    #[error("unsupported stream version {0}")]
    UnsupportedVersion(u8),

    /// Input ended in the middle of a header or event
    #[error("stream truncated: needed {needed} bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },

    /// A header or event field holds an impossible value
    #[error("invalid field `{field}`: {value}")]
    InvalidField { field: &'static str, value: u64 },

    /// Underlying I/O failure
    #[error("I/O error")]
    Io(#[from] io::Error),
}

/// Stream metadata stored in the file header.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamHeader {
    pub version: u8,
    pub plane: PlaneParams,
    pub pixel_mode: PixelMode,
}

impl StreamHeader {
    pub fn new(plane: PlaneParams, pixel_mode: PixelMode) -> Self {
        Self { version: VERSION, plane, pixel_mode }
    }

    pub fn event_size(&self) -> usize {
        if self.plane.channels > 1 {
            10
        } else {
            9
        }
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let p = &self.plane;
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(&MAGIC);
        b[4] = self.version;
        b[5] = ENDIAN_LITTLE;
        b[6..8].copy_from_slice(&p.width.to_le_bytes());
        b[8..10].copy_from_slice(&p.height.to_le_bytes());
        b[10] = p.channels;
        b[11] = p.source_kind as u8;
        b[12] = self.pixel_mode as u8;
        b[13] = 0;
        b[14..18].copy_from_slice(&p.dt_s.to_le_bytes());
        b[18..22].copy_from_slice(&p.dt_ref.to_le_bytes());
        b[22..26].copy_from_slice(&p.dt_max.to_le_bytes());
        b
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, StreamError> {
        if b.len() < 4 {
            return Err(StreamError::Truncated { offset: 0, needed: HEADER_LEN });
        }
        let magic: [u8; 4] = b[0..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(StreamError::BadMagic(magic));
        }
        if b.len() < HEADER_LEN {
            return Err(StreamError::Truncated { offset: 0, needed: HEADER_LEN });
        }
        if b[4] != VERSION {
            return Err(StreamError::UnsupportedVersion(b[4]));
        }
        if b[5] != ENDIAN_LITTLE {
            return Err(StreamError::InvalidField { field: "endianness", value: b[5] as u64 });
        }
        let u16_at = |i: usize| u16::from_le_bytes([b[i], b[i + 1]]);
        let u32_at = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        let channels = b[10];
        if channels != 1 && channels != 3 {
            return Err(StreamError::InvalidField { field: "channels", value: channels as u64 });
        }
        let source_kind = SourceKind::from_u8(b[11])
            .ok_or(StreamError::InvalidField { field: "source_kind", value: b[11] as u64 })?;
        let pixel_mode = PixelMode::from_u8(b[12])
            .ok_or(StreamError::InvalidField { field: "pixel_mode", value: b[12] as u64 })?;
        let plane = PlaneParams {
            width: u16_at(6),
            height: u16_at(8),
            channels,
            dt_s: u32_at(14),
            dt_ref: u32_at(18),
            dt_max: u32_at(22),
            source_kind,
        };
        if plane.width == 0 || plane.height == 0 {
            return Err(StreamError::InvalidField { field: "width/height", value: 0 });
        }
        Ok(Self { version: b[4], plane, pixel_mode })
    }
}

fn encode_event(h: &StreamHeader, e: &Event, buf: &mut Vec<u8>) {
    buf.extend_from_slice(&e.x.to_le_bytes());
    buf.extend_from_slice(&e.y.to_le_bytes());
    if h.plane.channels > 1 {
        buf.push(e.c);
    }
    buf.push(e.d);
    buf.extend_from_slice(&e.t.to_le_bytes());
}

fn decode_event(h: &StreamHeader, b: &[u8]) -> Result<Event, StreamError> {
    let x = u16::from_le_bytes([b[0], b[1]]);
    let y = u16::from_le_bytes([b[2], b[3]]);
    let (c, rest) = if h.plane.channels > 1 { (b[4], &b[5..]) } else { (0, &b[4..]) };
    let d = rest[0];
    let t = u32::from_le_bytes(rest[1..5].try_into().unwrap());
    if x >= h.plane.width || y >= h.plane.height {
        return Err(StreamError::InvalidField { field: "coordinate", value: ((x as u64) << 16) | y as u64 });
    }
    if c >= h.plane.channels {
        return Err(StreamError::InvalidField { field: "channel", value: c as u64 });
    }
    if d > D_MAX && d < 254 {
        return Err(StreamError::InvalidField { field: "d", value: d as u64 });
    }
    Ok(Event { x, y, c, d, t })
}

/// Serializes a header and events.
pub fn write_stream(header: &StreamHeader, events: &[Event]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + events.len() * header.event_size());
    buf.extend_from_slice(&header.to_bytes());
    for e in events {
        encode_event(header, e, &mut buf);
    }
    buf
}

/// Parses a header and returns an iterator over the events that follow it.
pub fn read_stream(bytes: &[u8]) -> Result<(StreamHeader, EventReader<'_>), StreamError> {
    let header = StreamHeader::from_bytes(bytes)?;
    Ok((header, EventReader { header, bytes, offset: HEADER_LEN }))
}

/// Reads a whole stream into memory.
pub fn read_all(bytes: &[u8]) -> Result<(StreamHeader, Vec<Event>), StreamError> {
    let (header, reader) = read_stream(bytes)?;
    let events = reader.collect::<Result<Vec<_>, _>>()?;
    Ok((header, events))
}

/// Iterator over packed events.
pub struct EventReader<'a> {
    header: StreamHeader,
    bytes: &'a [u8],
    offset: usize,
}

impl Iterator for EventReader<'_> {
    type Item = Result<Event, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.offset >= self.bytes.len() {
            return None;
        }
        let size = self.header.event_size();
        let end = self.offset + size;
        if end > self.bytes.len() {
            let offset = self.offset;
            self.offset = self.bytes.len();
            return Some(Err(StreamError::Truncated { offset, needed: size }));
        }
        let r = decode_event(&self.header, &self.bytes[self.offset..end]);
        self.offset = end;
        Some(r)
    }
}

/// Incremental writer for streams too long to hold in memory.
pub struct StreamWriter<W: Write> {
    header: StreamHeader,
    inner: W,
    buf: Vec<u8>,
    pub events_written: u64,
}

impl<W: Write> StreamWriter<W> {
    pub fn new(mut inner: W, header: StreamHeader) -> Result<Self, StreamError> {
        inner.write_all(&header.to_bytes())?;
        Ok(Self { header, inner, buf: Vec::new(), events_written: 0 })
    }

    pub fn write_events(&mut self, events: &[Event]) -> Result<(), StreamError> {
        self.buf.clear();
        for e in events {
            encode_event(&self.header, e, &mut self.buf);
        }
        self.inner.write_all(&self.buf)?;
        self.events_written += events.len() as u64;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, StreamError> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Reads a stream from any reader.
pub fn read_from<R: Read>(mut r: R) -> Result<(StreamHeader, Vec<Event>), StreamError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    read_all(&bytes)
}

/// Metadata and optional statistics for a stream.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamInfo {
    pub header: StreamHeader,
    pub event_count: u64,
    /// Events per second of stream time, when a deep scan ran and time advanced.
    pub event_rate: Option<f64>,
    /// log2(I_max / I_min) over intensity-carrying events.
    pub dynamic_range_bits: Option<f64>,
    pub duration_ticks: u64,
    /// Set when the scan stopped early on a corrupt record.
    pub error: Option<String>,
}

impl std::fmt::Display for StreamInfo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let p = &self.header.plane;
        writeln!(f, "version:        {}", self.header.version)?;
        writeln!(f, "endianness:     little")?;
        writeln!(f, "dimensions:     {}x{}x{}", p.width, p.height, p.channels)?;
        writeln!(f, "source:         {:?}", p.source_kind)?;
        writeln!(f, "pixel mode:     {:?}", self.header.pixel_mode)?;
        writeln!(f, "ticks/second:   {}", p.dt_s)?;
        writeln!(f, "dt_ref:         {}", p.dt_ref)?;
        writeln!(f, "dt_max:         {}", p.dt_max)?;
        writeln!(f, "events:         {}", self.event_count)?;
        match self.event_rate {
            Some(r) => writeln!(f, "event rate:     {r:.1} ev/s")?,
            None => writeln!(f, "event rate:     n/a")?,
        }
        match self.dynamic_range_bits {
            Some(r) => writeln!(f, "dynamic range:  {r:.2} bits")?,
            None => writeln!(f, "dynamic range:  n/a")?,
        }
        if let Some(e) = &self.error {
            writeln!(f, "error:          {e}")?;
        }
        Ok(())
    }
}

/// Header report, plus event rate and dynamic range when `deep_scan` is set.
pub fn stream_info(bytes: &[u8], deep_scan: bool) -> Result<StreamInfo, StreamError> {
    let (header, reader) = read_stream(bytes)?;
    let payload = bytes.len().saturating_sub(HEADER_LEN);
    let mut info = StreamInfo {
        header,
        event_count: (payload / header.event_size()) as u64,
        event_rate: None,
        dynamic_range_bits: None,
        duration_ticks: 0,
        error: None,
    };
    if !deep_scan {
        return Ok(info);
    }
    let mut last_t: HashMap<(u16, u16, u8), u32> = HashMap::new();
    let (mut i_min, mut i_max) = (f64::INFINITY, 0f64);
    let (mut count, mut t_max) = (0u64, 0u32);
    for r in reader {
        let e = match r {
            Ok(e) => e,
            Err(err) => {
                info.error = Some(err.to_string());
                break;
            }
        };
        count += 1;
        t_max = t_max.max(e.t);
        let prev = last_t.insert((e.x, e.y, e.c), e.t).unwrap_or(0);
        if e.d <= D_MAX {
            if let Some(i) = e.intensity_since(prev) {
                i_min = i_min.min(i);
                i_max = i_max.max(i);
            }
        }
    }
    info.event_count = count;
    info.duration_ticks = t_max as u64;
    if t_max > 0 {
        info.event_rate = Some(count as f64 * header.plane.dt_s as f64 / t_max as f64);
    }
    if i_max > 0.0 && i_min.is_finite() {
        info.dynamic_range_bits = Some((i_max / i_min).log2());
    }
    Ok(info)
}
