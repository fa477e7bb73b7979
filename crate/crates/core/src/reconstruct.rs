//! Events back to frames, live views and contrast events.

use std::collections::VecDeque;

use crate::dvs::DvsEvent;
use crate::event::{Event, PlaneParams, D_FILLER, D_MAX, D_ZERO};
use crate::frame::Frame;

/// Snaps values that float error left just below an integer.
const QUANT_EPS: f64 = 1e-6;

/// Per-channel intensity of one output frame, in units per reference interval.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueFrame {
    pub index: u64,
    pub values: Vec<f64>,
}

impl ValueFrame {
    /// Floors and clamps to [0, 255].
    pub fn to_frame(&self, plane: &PlaneParams) -> Frame {
        let data = self.values.iter().map(|&v| (v + QUANT_EPS).floor().clamp(0.0, 255.0) as u8).collect();
        Frame::from_data(plane.width, plane.height, plane.channels, data).expect("value frame matches plane")
    }

    /// Floors and clamps to [0, 65535].
    pub fn to_u16(&self) -> Vec<u16> {
        self.values.iter().map(|&v| (v + QUANT_EPS).floor().clamp(0.0, 65535.0) as u16).collect()
    }
}

/// Accurate framed reconstruction. Each event spreads its implied intensity over the
/// frames its span covers; a frame is released once every pixel has reached its end.
/// With a buffer limit, the oldest frame is released early and pixels that have not
/// reached it are assumed unchanged.
#[derive(Clone, Debug)]
pub struct Framer {
    plane: PlaneParams,
    dt_frame: u64,
    scale: f64,
    buffer_limit: Option<usize>,
    last_t: Vec<u64>,
    rate: Vec<f64>,
    filled_to: Vec<u64>,
    base: u64,
    acc: VecDeque<Vec<f64>>,
}

impl Framer {
    pub fn new(plane: PlaneParams, dt_frame: u32, buffer_limit: Option<usize>) -> Self {
        let n = plane.pixel_count() * plane.channels as usize;
        Self {
            plane,
            dt_frame: dt_frame.max(1) as u64,
            scale: plane.dt_ref as f64 / dt_frame.max(1) as f64,
            buffer_limit: buffer_limit.map(|b| b.max(1)),
            last_t: vec![0; n],
            rate: vec![0.0; n],
            filled_to: vec![0; n],
            base: 0,
            acc: VecDeque::new(),
        }
    }

    fn slot(&self, e: &Event) -> Option<usize> {
        self.plane
            .contains(e.x, e.y, e.c)
            .then(|| (e.y as usize * self.plane.width as usize + e.x as usize) * self.plane.channels as usize + e.c as usize)
    }

    fn frame_mut(&mut self, f: u64) -> Option<&mut Vec<f64>> {
        if f < self.base {
            return None;
        }
        let k = (f - self.base) as usize;
        let n = self.last_t.len();
        while self.acc.len() <= k {
            self.acc.push_back(vec![0.0; n]);
        }
        Some(&mut self.acc[k])
    }

    fn spread(&mut self, i: usize, from: u64, to: u64, rate: f64) {
        let from = from.max(self.filled_to[i]);
        if to <= from || rate == 0.0 {
            return;
        }
        let (df, scale) = (self.dt_frame, self.scale);
        for f in from / df..=(to - 1) / df {
            let (a, b) = (from.max(f * df), to.min((f + 1) * df));
            if let Some(frame) = self.frame_mut(f) {
                frame[i] += rate * (b - a) as f64 * scale;
            }
        }
    }

    pub fn ingest(&mut self, e: &Event) {
        let Some(i) = self.slot(e) else { return };
        let (t0, t) = (self.last_t[i], e.t as u64);
        if t <= t0 {
            return;
        }
        let span = (t - t0) as f64;
        let rate = match e.d {
            D_ZERO => 0.0,
            D_FILLER => self.rate[i],
            d if d <= D_MAX => 2f64.powi(d as i32) / span,
            _ => return,
        };
        self.spread(i, t0, t, rate);
        self.rate[i] = rate;
        self.last_t[i] = t;
    }

    fn reached(&self, i: usize) -> u64 {
        self.last_t[i].max(self.filled_to[i])
    }

    fn release_front(&mut self, fill_stale: bool) -> ValueFrame {
        let (start, end) = (self.base * self.dt_frame, (self.base + 1) * self.dt_frame);
        if fill_stale {
            for i in 0..self.last_t.len() {
                let from = self.reached(i).max(start);
                if from < end {
                    let rate = self.rate[i];
                    self.spread(i, from, end, rate);
                    self.filled_to[i] = end;
                }
            }
        }
        let values = self.acc.pop_front().unwrap_or_else(|| vec![0.0; self.last_t.len()]);
        let index = self.base;
        self.base += 1;
        ValueFrame { index, values }
    }

    /// Ingests a batch and returns the frames it completed.
    pub fn ingest_all(&mut self, events: &[Event]) -> Vec<ValueFrame> {
        for e in events {
            self.ingest(e);
        }
        let mut out = Vec::new();
        let reached = (0..self.last_t.len()).map(|i| self.reached(i)).min().unwrap_or(0);
        while (self.base + 1) * self.dt_frame <= reached {
            out.push(self.release_front(false));
        }
        if let Some(limit) = self.buffer_limit {
            while self.acc.len() > limit {
                out.push(self.release_front(true));
            }
        }
        out
    }

    /// Releases every remaining frame up to `end_t` (default: the furthest event),
    /// extending each pixel's last intensity over uncovered time.
    pub fn finish(&mut self, end_t: Option<u64>) -> Vec<ValueFrame> {
        let end = end_t.unwrap_or_else(|| self.last_t.iter().copied().max().unwrap_or(0));
        let frames = end.div_ceil(self.dt_frame);
        let mut out = Vec::new();
        while self.base < frames {
            out.push(self.release_front(true));
        }
        out
    }
}

/// Accurate reconstruction of a whole event list.
pub fn reconstruct_accurate(
    plane: &PlaneParams,
    events: &[Event],
    dt_frame: u32,
    buffer_limit: Option<usize>,
    end_t: Option<u64>,
) -> Vec<ValueFrame> {
    let mut f = Framer::new(*plane, dt_frame, buffer_limit);
    let mut out = f.ingest_all(events);
    out.extend(f.finish(end_t));
    out
}

/// Instantaneous display value in [0, 255] for an event spanning `dt` ticks.
pub fn instantaneous_value(d: u8, dt: u32, i_max: f64, dt_frame: u32) -> Option<u8> {
    match d {
        D_ZERO => Some(0),
        d if d <= D_MAX && dt > 0 => {
            let v = 2f64.powi(d as i32) / i_max * (dt_frame as f64 / dt as f64);
            Some((v.clamp(0.0, 1.0) * 255.0).round() as u8)
        }
        _ => None,
    }
}

/// Latest-event views of a stream: instantaneous intensity, D and Δt images.
#[derive(Clone, Debug)]
pub struct LiveView {
    plane: PlaneParams,
    i_max: f64,
    dt_frame: u32,
    next_frame_end: u64,
    last_t: Vec<u32>,
    last_d: Vec<Option<u8>>,
    last_dt: Vec<Option<u32>>,
    intensity: Vec<u8>,
}

impl LiveView {
    pub fn new(plane: PlaneParams, i_max: f64, dt_frame: u32) -> Self {
        let n = plane.pixel_count() * plane.channels as usize;
        Self {
            plane,
            i_max,
            dt_frame: dt_frame.max(1),
            next_frame_end: dt_frame.max(1) as u64,
            last_t: vec![0; n],
            last_d: vec![None; n],
            last_dt: vec![None; n],
            intensity: vec![0; n],
        }
    }

    /// Applies one event. Snapshots of the intensity image are returned for every frame
    /// interval the event's timestamp closes; they never include the event itself.
    pub fn ingest(&mut self, e: &Event) -> Vec<Frame> {
        let mut shots = Vec::new();
        while e.t as u64 >= self.next_frame_end {
            shots.push(self.intensity_frame());
            self.next_frame_end += self.dt_frame as u64;
        }
        if !self.plane.contains(e.x, e.y, e.c) {
            return shots;
        }
        let i = (e.y as usize * self.plane.width as usize + e.x as usize) * self.plane.channels as usize + e.c as usize;
        let dt = e.t.saturating_sub(self.last_t[i]);
        if let Some(v) = instantaneous_value(e.d, dt, self.i_max, self.dt_frame) {
            self.intensity[i] = v;
        }
        if e.d != D_FILLER {
            self.last_d[i] = Some(e.d);
            if dt > 0 {
                self.last_dt[i] = Some(dt);
            }
        }
        self.last_t[i] = e.t;
        shots
    }

    pub fn intensity_frame(&self) -> Frame {
        Frame::from_data(self.plane.width, self.plane.height, self.plane.channels, self.intensity.clone()).unwrap()
    }

    /// Decimation exponents min-max normalized to [0, 255]; reserved and unset pixels
    /// render 0, and a uniform plane renders 128.
    pub fn d_image(&self) -> Frame {
        let vals: Vec<Option<f64>> =
            self.last_d.iter().map(|d| d.filter(|&d| d <= D_MAX).map(|d| d as f64)).collect();
        self.normalized(&vals)
    }

    /// Latest event spans min-max normalized; shorter spans are darker.
    pub fn dt_image(&self) -> Frame {
        let vals: Vec<Option<f64>> = self.last_dt.iter().map(|d| d.map(|d| d as f64)).collect();
        self.normalized(&vals)
    }

    fn normalized(&self, vals: &[Option<f64>]) -> Frame {
        let lo = vals.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        let data = vals
            .iter()
            .map(|v| match v {
                None => 0,
                Some(_) if hi <= lo => 128,
                Some(v) => ((v - lo) / (hi - lo) * 255.0).round() as u8,
            })
            .collect();
        Frame::from_data(self.plane.width, self.plane.height, self.plane.channels, data).unwrap()
    }
}

/// Contrast-event export settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExportDvsParams {
    pub theta: f64,
    /// Fraction of θ that still counts as a crossing, absorbing timing quantization.
    pub slack: f64,
}

impl Default for ExportDvsParams {
    fn default() -> Self {
        Self { theta: 0.15, slack: 0.25 }
    }
}

/// Log intensity `ln(1 + I·Δt_ref/255)` of a normalized event intensity.
pub fn log_intensity(rate_per_tick: f64, dt_ref: u32) -> f64 {
    (rate_per_tick * dt_ref as f64 / 255.0).ln_1p()
}

/// Converts intensity events into contrast events on channel 0. Each event whose log
/// intensity differs from the pixel's reference by `k` thresholds emits `k` events of
/// that polarity stamped at the start of its span. Output is time ordered.
pub fn export_dvs(plane: &PlaneParams, events: &[Event], params: ExportDvsParams) -> Vec<DvsEvent> {
    let n = plane.pixel_count();
    let mut last_t = vec![0u32; n];
    let mut reference: Vec<Option<f64>> = vec![None; n];
    let mut out = Vec::new();
    for e in events.iter().filter(|e| e.c == 0 && plane.contains(e.x, e.y, 0)) {
        let i = e.y as usize * plane.width as usize + e.x as usize;
        let span = e.t.saturating_sub(last_t[i]);
        let v = match e.d {
            D_FILLER => {
                last_t[i] = e.t;
                continue;
            }
            D_ZERO => 0.0,
            d if d <= D_MAX && span > 0 => log_intensity(2f64.powi(d as i32) / span as f64, plane.dt_ref),
            _ => continue,
        };
        match reference[i] {
            None => reference[i] = Some(v),
            Some(r) => {
                let delta = v - r;
                let k = (delta.abs() / params.theta + params.slack).floor() as u32;
                if k > 0 {
                    let p = if delta > 0.0 { 1 } else { -1 };
                    out.extend((0..k).map(|_| DvsEvent::new(e.x, e.y, p, last_t[i])));
                    reference[i] = Some(r + p as f64 * k as f64 * params.theta);
                }
            }
        }
        last_t[i] = e.t;
    }
    out.sort_by_key(|e| e.t);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::SourceKind;

    fn plane(w: u16, h: u16) -> PlaneParams {
        PlaneParams { width: w, height: h, channels: 1, dt_s: 7650, dt_ref: 255, dt_max: 2550, source_kind: SourceKind::Framed }
    }

    #[test]
    fn max_white_event() {
        let p = plane(1, 1);
        let f = reconstruct_accurate(&p, &[Event::new(0, 0, 0, 7, 128)], 255, None, Some(128));
        assert_eq!(f.len(), 1);
        // the uncovered tail of the frame keeps the last intensity
        assert!((f[0].values[0] - 255.0).abs() < 1e-9);
        let full = reconstruct_accurate(&p, &[Event::new(0, 0, 0, 7, 128), Event::new(0, 0, 0, D_FILLER, 255)], 255, None, None);
        assert_eq!(full[0].to_frame(&p).data, vec![255]);
    }

    #[test]
    fn zero_event_and_frame_split() {
        let p = plane(1, 1);
        let ev = [Event::new(0, 0, 0, D_ZERO, 255), Event::new(0, 0, 0, 8, 510), Event::new(0, 0, 0, D_FILLER, 765)];
        let f = reconstruct_accurate(&p, &ev, 255, None, None);
        let vals: Vec<u8> = f.iter().map(|f| f.to_frame(&p).data[0]).collect();
        assert_eq!(vals, vec![0, 255, 255]);
    }

    #[test]
    fn frames_release_when_all_pixels_pass() {
        let p = plane(2, 1);
        let mut fr = Framer::new(p, 255, None);
        assert!(fr.ingest_all(&[Event::new(0, 0, 0, 7, 510)]).is_empty());
        let out = fr.ingest_all(&[Event::new(1, 0, 0, 7, 300)]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].index, 0);
    }

    #[test]
    fn buffer_limit_fills_stale() {
        let p = plane(2, 1);
        let mut fr = Framer::new(p, 255, Some(2));
        fr.ingest_all(&[Event::new(1, 0, 0, 8, 256)]);
        let out = fr.ingest_all(&[Event::new(0, 0, 0, 7, 255 * 4)]);
        assert_eq!(out.len(), 2);
        // pixel 1 is stale in frame 1 and keeps its 1-per-tick rate
        assert_eq!(out[1].to_frame(&p).data, vec![32, 255]);
    }

    #[test]
    fn instantaneous_formula() {
        assert_eq!(instantaneous_value(8, 256, 255.0, 255), Some(255));
        assert_eq!(instantaneous_value(0, 255, 255.0, 255), Some(1));
        assert_eq!(instantaneous_value(D_ZERO, 10, 255.0, 255), Some(0));
        assert_eq!(instantaneous_value(D_FILLER, 10, 255.0, 255), None);
    }

    #[test]
    fn live_view_is_causal() {
        let mut v = LiveView::new(plane(1, 1), 255.0, 255);
        assert!(v.ingest(&Event::new(0, 0, 0, 7, 128)).is_empty());
        let shots = v.ingest(&Event::new(0, 0, 0, 2, 600));
        assert_eq!(shots.len(), 2);
        assert_eq!(shots[0].data, vec![255]);
        assert_eq!(v.intensity_frame().data, vec![2]);
        v.ingest(&Event::new(0, 0, 0, D_FILLER, 700));
        assert_eq!(v.intensity_frame().data, vec![2]);
    }

    #[test]
    fn d_and_dt_images() {
        let mut v = LiveView::new(plane(3, 1), 255.0, 255);
        v.ingest(&Event::new(0, 0, 0, 3, 10));
        v.ingest(&Event::new(1, 0, 0, 11, 40));
        v.ingest(&Event::new(2, 0, 0, D_ZERO, 20));
        assert_eq!(v.d_image().data, vec![0, 255, 0]);
        assert_eq!(v.dt_image().data, vec![0, 255, 85]);
        let mut u = LiveView::new(plane(2, 1), 255.0, 255);
        u.ingest(&Event::new(0, 0, 0, 7, 10));
        u.ingest(&Event::new(1, 0, 0, 7, 10));
        assert_eq!(u.d_image().data, vec![128, 128]);
    }

    #[test]
    fn export_counts_crossings() {
        let p = plane(1, 1);
        // rate r ↦ ln(1 + r·255/255); build a step of exactly θ
        let base = 0.5f64;
        let stepped = ((1.0 + base).ln() + 0.15).exp_m1();
        let t1 = (128.0 / base).round() as u32;
        let t2 = t1 + (128.0 / stepped).round() as u32;
        let ev = [Event::new(0, 0, 0, 7, t1), Event::new(0, 0, 0, 7, t2), Event::new(0, 0, 0, D_FILLER, t2 + 500)];
        let out = export_dvs(&p, &ev, ExportDvsParams::default());
        assert_eq!(out, vec![DvsEvent::new(0, 0, 1, t1)]);
        let flat = [Event::new(0, 0, 0, 7, 256), Event::new(0, 0, 0, 7, 512), Event::new(0, 0, 0, 7, 768)];
        assert!(export_dvs(&p, &flat, ExportDvsParams::default()).is_empty());
    }
}
