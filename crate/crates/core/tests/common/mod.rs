#![allow(dead_code)]

use eventforge_core::event::sort_by_time;
use eventforge_core::reconstruct::reconstruct_accurate;
use eventforge_core::transcode::FramedTranscoder;
use eventforge_core::{Event, PixelMode, PlaneParams, SensitivityParams, SourceKind};

pub fn framed_plane(w: u16, h: u16, dt_max: u32) -> PlaneParams {
    PlaneParams { width: w, height: h, channels: 1, dt_s: 255 * 30, dt_ref: 255, dt_max, source_kind: SourceKind::Framed }
}

pub fn transcode(plane: PlaneParams, frames: &[Vec<u8>], sens: SensitivityParams) -> Vec<Event> {
    let mut tc = FramedTranscoder::new(plane, sens, PixelMode::Collapse).unwrap();
    let mut out = Vec::new();
    for f in frames {
        out.extend(tc.transcode_frame(f).unwrap());
    }
    out.extend(tc.finish());
    sort_by_time(&mut out);
    out
}

pub fn reconstruct(plane: &PlaneParams, events: &[Event], frames: usize) -> Vec<Vec<u8>> {
    let end = frames as u64 * plane.dt_ref as u64;
    reconstruct_accurate(plane, events, plane.dt_ref, None, Some(end))
        .into_iter()
        .take(frames)
        .map(|f| f.to_frame(plane).data)
        .collect()
}

pub fn max_error(a: &[Vec<u8>], b: &[Vec<u8>]) -> i32 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(&p, &q)| (p as i32 - q as i32).abs()))
        .max()
        .unwrap_or(0)
}

pub fn pixel_events(events: &[Event], x: u16, y: u16) -> Vec<Event> {
    events.iter().filter(|e| e.x == x && e.y == y).copied().collect()
}
