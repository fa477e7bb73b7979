//! DVS contrast events to intensity events through a latent log image.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::TranscodeError;
use crate::dvs::DvsEvent;
use crate::event::{Event, PixelMode, PlaneParams, SensitivityParams, SourceKind};
use crate::pixel::PixelState;

/// Latent intensity every pixel starts from and resets to.
pub const MID_GRAY: f64 = 0.5;
/// Intensity units that a latent value of 1.0 contributes per reference interval.
pub const LATENT_SCALE: f64 = 255.0;

/// Configuration of the DVS ingest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DvsParams {
    pub width: u16,
    pub height: u16,
    /// Contrast threshold in natural-log units.
    pub theta: f64,
    /// Ticks between latent resets; 0 disables resets.
    pub reset_interval: u32,
    /// Ticks of timestamp disorder tolerated and repaired.
    pub reorder_window: u32,
    pub dt_ref: u32,
    pub dt_max: u32,
}

impl DvsParams {
    pub fn new(width: u16, height: u16) -> Self {
        Self { width, height, theta: 0.15, reset_interval: 500_000, reorder_window: 1000, dt_ref: 2000, dt_max: 20_000 }
    }

    pub fn plane(&self) -> PlaneParams {
        PlaneParams {
            width: self.width,
            height: self.height,
            channels: 1,
            dt_s: 1_000_000,
            dt_ref: self.dt_ref,
            dt_max: self.dt_max,
            source_kind: SourceKind::Dvs,
        }
    }
}

/// Log-domain latent update: `ln(1+L) + p·θ`, with `L` clamped to [0, 1].
pub fn latent_update(l: f64, p: i8, theta: f64) -> f64 {
    let log = (1.0 + l).ln() + p as f64 * theta;
    (log.exp() - 1.0).clamp(0.0, 1.0)
}

/// Streaming mode (iii) transcoder. Pixels integrate their latent intensity lazily,
/// only when a contrast event, a reset or the end of input touches them.
#[derive(Debug)]
pub struct DvsTranscoder {
    params: DvsParams,
    sens: SensitivityParams,
    plane: PlaneParams,
    latent: Vec<f64>,
    pixels: Vec<PixelState>,
    touched: Vec<usize>,
    is_touched: Vec<bool>,
    next_reset: u64,
    heap: BinaryHeap<Reverse<(u32, u64, u16, u16, i8)>>,
    seq: u64,
    latest: Option<u32>,
    dropped: u64,
}

impl DvsTranscoder {
    pub fn new(params: DvsParams, sens: SensitivityParams, mode: PixelMode) -> Result<Self, TranscodeError> {
        let plane = params.plane();
        plane.validate()?;
        sens.validate()?;
        let n = plane.pixel_count();
        let mut pixels = Vec::with_capacity(n);
        for y in 0..params.height {
            for x in 0..params.width {
                let mut p = PixelState::new(x, y, 0, mode, params.dt_ref);
                p.set_threshold(sens.m as u16);
                pixels.push(p);
            }
        }
        Ok(Self {
            params,
            sens,
            plane,
            latent: vec![MID_GRAY; n],
            pixels,
            touched: Vec::new(),
            is_touched: vec![false; n],
            next_reset: if params.reset_interval == 0 { u64::MAX } else { params.reset_interval as u64 },
            heap: BinaryHeap::new(),
            seq: 0,
            latest: None,
            dropped: 0,
        })
    }

    pub fn plane(&self) -> &PlaneParams {
        &self.plane
    }

    /// Events outside the plane that were discarded.
    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn latent(&self, x: u16, y: u16) -> f64 {
        self.latent[y as usize * self.params.width as usize + x as usize]
    }

    /// Buffers one event and emits everything that can no longer be reordered.
    pub fn push(&mut self, e: DvsEvent, out: &mut Vec<Event>) -> Result<(), TranscodeError> {
        if e.x >= self.params.width || e.y >= self.params.height {
            self.dropped += 1;
            return Ok(());
        }
        let window = self.params.reorder_window;
        if let Some(latest) = self.latest {
            if e.t as u64 + (window as u64) < latest as u64 {
                return Err(TranscodeError::OutOfOrder { t: e.t, latest, window });
            }
        }
        let latest = self.latest.map_or(e.t, |l| l.max(e.t));
        self.latest = Some(latest);
        self.heap.push(Reverse((e.t, self.seq, e.x, e.y, e.p)));
        self.seq += 1;
        let release = latest.saturating_sub(window);
        while let Some(&Reverse((t, ..))) = self.heap.peek() {
            if t >= release {
                break;
            }
            let Reverse((t, _, x, y, p)) = self.heap.pop().unwrap();
            self.apply(DvsEvent { x, y, p, t }, out);
        }
        Ok(())
    }

    pub fn push_all(&mut self, events: &[DvsEvent]) -> Result<Vec<Event>, TranscodeError> {
        let mut out = Vec::new();
        for &e in events {
            self.push(e, &mut out)?;
        }
        Ok(out)
    }

    fn apply(&mut self, e: DvsEvent, out: &mut Vec<Event>) {
        self.run_resets(e.t as u64, out);
        let i = e.y as usize * self.params.width as usize + e.x as usize;
        self.advance(i, e.t as u64, out);
        self.latent[i] = latent_update(self.latent[i], e.p, self.params.theta);
        if !self.is_touched[i] {
            self.is_touched[i] = true;
            self.touched.push(i);
        }
    }

    fn run_resets(&mut self, upto: u64, out: &mut Vec<Event>) {
        while self.next_reset <= upto {
            let t = self.next_reset;
            for i in std::mem::take(&mut self.touched) {
                self.advance(i, t, out);
                self.latent[i] = MID_GRAY;
                self.is_touched[i] = false;
            }
            self.next_reset += self.params.reset_interval as u64;
        }
    }

    /// Integrates pixel `i` up to `to` in pieces that end on reference boundaries, so
    /// each piece is at most one reference interval long.
    fn advance(&mut self, i: usize, to: u64, out: &mut Vec<Event>) {
        let dt_ref = self.params.dt_ref as u64;
        let per_tick = self.latent[i] * LATENT_SCALE / dt_ref as f64;
        let p = &mut self.pixels[i];
        while p.running_t() < to {
            let from = p.running_t();
            let end = ((from / dt_ref + 1) * dt_ref).min(to);
            let span = end - from;
            p.process(per_tick * span as f64, span, self.params.dt_max, &self.sens, out);
        }
    }

    /// Drains the reorder buffer, integrates every pixel up to `end_t` and closes all
    /// levels. `end_t` defaults to the next reference boundary after the last event.
    pub fn finish(&mut self, end_t: Option<u32>) -> Vec<Event> {
        let mut out = Vec::new();
        while let Some(Reverse((t, _, x, y, p))) = self.heap.pop() {
            self.apply(DvsEvent { x, y, p, t }, &mut out);
        }
        let dt_ref = self.params.dt_ref as u64;
        let end = end_t.map_or_else(|| (self.latest.map_or(0, |l| l as u64) / dt_ref + 1) * dt_ref, |t| t as u64);
        let end = end.min(u32::MAX as u64);
        self.run_resets(end.saturating_sub(1), &mut out);
        for i in 0..self.pixels.len() {
            self.advance(i, end, &mut out);
            self.pixels[i].end_level(&mut out);
        }
        out
    }
}
