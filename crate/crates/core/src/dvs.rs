//! DVS contrast events and their neutral binary/CSV carriers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bytes per binary record: x u16, y u16, p i8, t u32.
pub const DVS_RECORD_LEN: usize = 9;

/// One contrast event. `t` is in microsecond ticks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DvsEvent {
    pub x: u16,
    pub y: u16,
    pub p: i8,
    pub t: u32,
}

impl DvsEvent {
    pub fn new(x: u16, y: u16, p: i8, t: u32) -> Self {
        Self { x, y, p, t }
    }
}

/// Errors raised by the DVS readers.
#[derive(Error, Debug)]
pub enum DvsError {
    /// Binary input length is not a whole number of records
    #[error("DVS binary input has {0} trailing bytes")]
    Truncated(usize),

    /// Polarity other than -1 or +1
    #[error("event {index}: polarity must be -1 or +1, got {p}")]
    Polarity { index: usize, p: i8 },

    /// Malformed CSV row
    #[error("DVS CSV: {0}")]
    Csv(#[from] csv::Error),
}

pub fn write_dvs_binary(events: &[DvsEvent]) -> Vec<u8> {
    let mut out = Vec::with_capacity(events.len() * DVS_RECORD_LEN);
    for e in events {
        out.extend_from_slice(&e.x.to_le_bytes());
        out.extend_from_slice(&e.y.to_le_bytes());
        out.push(e.p as u8);
        out.extend_from_slice(&e.t.to_le_bytes());
    }
    out
}

pub fn read_dvs_binary(bytes: &[u8]) -> Result<Vec<DvsEvent>, DvsError> {
    let rem = bytes.len() % DVS_RECORD_LEN;
    if rem != 0 {
        return Err(DvsError::Truncated(rem));
    }
    bytes
        .chunks_exact(DVS_RECORD_LEN)
        .enumerate()
        .map(|(index, r)| {
            let p = r[4] as i8;
            if p != 1 && p != -1 {
                return Err(DvsError::Polarity { index, p });
            }
            Ok(DvsEvent {
                x: u16::from_le_bytes([r[0], r[1]]),
                y: u16::from_le_bytes([r[2], r[3]]),
                p,
                t: u32::from_le_bytes([r[5], r[6], r[7], r[8]]),
            })
        })
        .collect()
}

/// Writes `x,y,p,t` rows with a header line.
pub fn write_dvs_csv(events: &[DvsEvent]) -> Result<String, DvsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for e in events {
        w.serialize(e)?;
    }
    let bytes = w.into_inner().map_err(|e| DvsError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Reads `x,y,p,t` rows; a header line is optional and `#` starts a comment line.
pub fn read_dvs_csv(text: &str) -> Result<Vec<DvsEvent>, DvsError> {
    let has_header = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .is_some_and(|l| l.trim_start().starts_with(|c: char| c.is_alphabetic()));
    let mut r = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (index, row) in r.records().enumerate() {
        let row = row?;
        let e: DvsEvent = row.deserialize(None)?;
        if e.p != 1 && e.p != -1 {
            return Err(DvsError::Polarity { index, p: e.p });
        }
        out.push(e);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<DvsEvent> {
        vec![DvsEvent::new(1, 2, 1, 10), DvsEvent::new(300, 7, -1, 4_000_000_000), DvsEvent::new(0, 0, 1, 0)]
    }

    #[test]
    fn binary_round_trip() {
        let b = write_dvs_binary(&sample());
        assert_eq!(b.len(), 27);
        assert_eq!(read_dvs_binary(&b).unwrap(), sample());
        assert!(matches!(read_dvs_binary(&b[..26]), Err(DvsError::Truncated(8))));
        let mut bad = b.clone();
        bad[4] = 0;
        assert!(matches!(read_dvs_binary(&bad), Err(DvsError::Polarity { index: 0, p: 0 })));
    }

    #[test]
    fn csv_round_trip() {
        let text = write_dvs_csv(&sample()).unwrap();
        assert!(text.starts_with("x,y,p,t"));
        assert_eq!(read_dvs_csv(&text).unwrap(), sample());
        assert_eq!(read_dvs_csv("# comment\n1, 2, -1, 5\n3,4,1,6\n").unwrap().len(), 2);
        assert!(read_dvs_csv("1,2,3,4\n").is_err());
        assert!(read_dvs_csv("1,2,x,4\n").is_err());
    }
}
