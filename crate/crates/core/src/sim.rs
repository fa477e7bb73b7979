//! Discrete-event simulation of an integrating event sensor fed with photon-count frames.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{Event, PlaneParams, SourceKind, D, D_MAX, D_ZERO};

/// Rows per parallel work item.
const BAND_ROWS: usize = 8;
/// Highest decimation the simulator will reach.
pub const SIM_D_MAX: D = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimMode {
    /// D never changes
    Constant,
    /// Each pixel tunes its own D from timing stability
    SelfAdjust,
    /// Self adjustment plus neighbor throttling and nudging
    Radial,
    /// D follows the pixel's Δt limit, set by its distance to the region of interest
    Aggressive,
}

impl std::str::FromStr for SimMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "constant" => Ok(Self::Constant),
            "self_adjust" | "self-adjust" => Ok(Self::SelfAdjust),
            "radial" => Ok(Self::Radial),
            "aggressive" => Ok(Self::Aggressive),
            other => Err(format!("unknown simulation mode `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mode: SimMode,
    pub width: u16,
    pub height: u16,
    pub dt_s: u32,
    pub dt_ref: u32,
    pub dt_max: u32,
    pub initial_d: D,
    /// Neighborhood throttled by an empty event (radial mode).
    pub throttle_radius: u16,
    /// Neighborhood nudged by a D change (radial mode).
    pub minor_radius: u16,
    /// ROI factor just outside the region of interest (aggressive mode).
    pub roi_near: f64,
    /// Pixels of distance per unit of ROI factor decay.
    pub roi_falloff: f64,
}

impl SimConfig {
    pub fn new(mode: SimMode, width: u16, height: u16) -> Self {
        Self {
            mode,
            width,
            height,
            dt_s: 12_000,
            dt_ref: 50,
            dt_max: 2500,
            initial_d: 8,
            throttle_radius: 1,
            minor_radius: 2,
            roi_near: 8.0,
            roi_falloff: 4.0,
        }
    }

    pub fn plane(&self) -> PlaneParams {
        PlaneParams {
            width: self.width,
            height: self.height,
            channels: 1,
            dt_s: self.dt_s,
            dt_ref: self.dt_ref,
            dt_max: self.dt_max,
            source_kind: SourceKind::Simulated,
        }
    }
}

/// One replayed region-of-interest sample; it applies from frame `index` on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiSample {
    #[serde(rename = "sample_index")]
    pub index: u64,
    pub x: u16,
    pub y: u16,
    pub w: u16,
    pub h: u16,
}

impl RoiSample {
    pub fn contains(&self, x: u16, y: u16) -> bool {
        x >= self.x && y >= self.y && (x as u32) < self.x as u32 + self.w as u32 && (y as u32) < self.y as u32 + self.h as u32
    }

    /// Chebyshev distance from the rectangle; 0 inside.
    pub fn distance(&self, x: u16, y: u16) -> u32 {
        let gap = |v: u16, lo: u16, len: u16| {
            let hi = lo as i64 + len as i64 - 1;
            if (v as i64) < lo as i64 {
                lo as i64 - v as i64
            } else if v as i64 > hi {
                v as i64 - hi
            } else {
                0
            }
        };
        gap(x, self.x, self.w).max(gap(y, self.y, self.h)) as u32
    }
}

/// Errors raised by the simulator.
#[derive(Error, Debug)]
pub enum SimError {
    /// Photon frame size does not match the sensor
    #[error("photon frame has {got} values, expected {expected}")]
    FrameSize { expected: usize, got: usize },

    /// Simulated time passed 32 bits
    #[error("simulation time range exhausted")]
    TimeOverflow,

    /// ROI track CSV could not be parsed
    #[error("ROI track: {0}")]
    Roi(#[from] csv::Error),
}

pub fn read_roi_track(text: &str) -> Result<Vec<RoiSample>, SimError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
    let mut v: Vec<RoiSample> = r.deserialize().collect::<Result<_, _>>()?;
    v.sort_by_key(|s| s.index);
    Ok(v)
}

/// Counters gathered over a run. Runs of identical consecutive events (same D and span)
/// are what a sensor would send as repeat records.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimStats {
    pub frames: u64,
    pub events: u64,
    pub empty_events: u64,
    pub repeat_records: u64,
    pub repeated_events: u64,
}

#[derive(Clone, Debug)]
pub struct SimPixel {
    pub d: D,
    pub photons: u64,
    pub last_t: u64,
    pub prediction: Option<u64>,
    stable_bits: u32,
    last_event: Option<(D, u64)>,
    in_repeat: bool,
    pub in_roi: bool,
}

impl SimPixel {
    fn new(d: D) -> Self {
        Self { d, photons: 0, last_t: 0, prediction: None, stable_bits: 0, last_event: None, in_roi: false, in_repeat: false }
    }
}

/// Empty-event throttle: `D ← ⌊log2 D⌋`, prediction divided by the drop.
pub fn throttle(d: D, prediction: Option<u64>) -> (D, Option<u64>) {
    if d <= 1 {
        return (0, prediction);
    }
    let new = (d as f64).log2().floor() as D;
    let drop = (d - new) as u64;
    (new, prediction.map(|p| (p / drop).max(1)))
}

/// Aggressive rule: double the exposure while `2Δt` fits the limit, shorten on empties.
pub fn adjust_aggressive(d: D, dt: Option<u64>, limit: u64) -> D {
    match dt {
        None => d.saturating_sub(1),
        Some(dt) if 2 * dt < limit => (d + 1).min(SIM_D_MAX),
        Some(_) => d,
    }
}

fn stable_bits(dt: u64, prediction: u64) -> u32 {
    ((dt.min(u32::MAX as u64) as u32) ^ (prediction.min(u32::MAX as u64) as u32)).leading_zeros()
}

/// Self-adjust rule after a fired event: slow down while the timing is at least as
/// predictable as before and the pixel fires more than twice per reference interval;
/// speed up when predictability drops.
fn adjust_self(p: &mut SimPixel, dt: u64, dt_ref: u64) -> i8 {
    let Some(pred) = p.prediction else {
        p.prediction = Some(dt);
        p.stable_bits = 0;
        return 0;
    };
    let stable = stable_bits(dt, pred);
    let before = p.stable_bits;
    p.stable_bits = stable;
    if stable >= before && 2 * dt <= dt_ref && p.d < SIM_D_MAX {
        p.d += 1;
        p.prediction = Some(dt * 2);
        1
    } else if stable + 2 < before && p.d > 0 {
        p.d -= 1;
        p.prediction = Some((dt / 2).max(1));
        -1
    } else {
        p.prediction = Some(dt);
        0
    }
}

/// Deferred cross-pixel effect from radial mode.
#[derive(Clone, Copy, Debug)]
enum Radial {
    Throttle(u16, u16),
    Nudge(u16, u16, i8),
}

/// Square neighborhood (including the center) clipped to the plane.
pub fn radial_targets(x: u16, y: u16, radius: u16, width: u16, height: u16) -> Vec<(u16, u16)> {
    if radius == 0 {
        return Vec::new();
    }
    let r = radius as i32;
    let mut v = Vec::new();
    for yy in (y as i32 - r).max(0)..=(y as i32 + r).min(height as i32 - 1) {
        for xx in (x as i32 - r).max(0)..=(x as i32 + r).min(width as i32 - 1) {
            v.push((xx as u16, yy as u16));
        }
    }
    v
}

#[derive(Clone, Debug)]
pub struct Simulator {
    pub config: SimConfig,
    pixels: Vec<SimPixel>,
    frame: u64,
    roi: Vec<RoiSample>,
    pub stats: SimStats,
}

impl Simulator {
    pub fn new(config: SimConfig) -> Self {
        let n = config.width as usize * config.height as usize;
        Self { config, pixels: vec![SimPixel::new(config.initial_d); n], frame: 0, roi: Vec::new(), stats: SimStats::default() }
    }

    pub fn with_roi_track(mut self, mut track: Vec<RoiSample>) -> Self {
        track.sort_by_key(|s| s.index);
        self.roi = track;
        self
    }

    pub fn pixel(&self, x: u16, y: u16) -> &SimPixel {
        &self.pixels[y as usize * self.config.width as usize + x as usize]
    }

    fn current_roi(&self) -> Option<RoiSample> {
        self.roi.iter().take_while(|s| s.index <= self.frame).last().copied()
    }

    /// Δt limit of a pixel in aggressive mode.
    pub fn dt_limit(&self, roi: Option<&RoiSample>, x: u16, y: u16) -> u64 {
        let c = &self.config;
        match roi {
            Some(r) if r.contains(x, y) => c.dt_ref as u64,
            Some(r) => {
                let factor = (c.roi_near - r.distance(x, y) as f64 / c.roi_falloff.max(1e-9)).max(1.0);
                (c.dt_max as f64 / factor) as u64
            }
            None => c.dt_max as u64,
        }
    }

    /// Integrates one frame of photon counts over `(t, t + Δt_ref]`.
    pub fn ingest_frame(&mut self, photons: &[u16]) -> Result<Vec<Event>, SimError> {
        let (w, h) = (self.config.width as usize, self.config.height as usize);
        if photons.len() != w * h {
            return Err(SimError::FrameSize { expected: w * h, got: photons.len() });
        }
        let c = self.config;
        let fs = self.frame * c.dt_ref as u64;
        let fe = fs + c.dt_ref as u64;
        if fe > u32::MAX as u64 {
            return Err(SimError::TimeOverflow);
        }
        let roi = self.current_roi();
        let limits: Vec<u64> = if c.mode == SimMode::Aggressive {
            (0..w * h).map(|i| self.dt_limit(roi.as_ref(), (i % w) as u16, (i / w) as u16)).collect()
        } else {
            Vec::new()
        };
        let band = BAND_ROWS * w;
        let results: Vec<(Vec<Event>, Vec<Radial>, SimStats)> = self
            .pixels
            .par_chunks_mut(band)
            .zip(photons.par_chunks(band))
            .enumerate()
            .map(|(b, (pixels, counts))| {
                let mut out = Vec::new();
                let mut radial = Vec::new();
                let mut stats = SimStats::default();
                for (k, (p, &n)) in pixels.iter_mut().zip(counts).enumerate() {
                    let i = b * band + k;
                    let (x, y) = ((i % w) as u16, (i / w) as u16);
                    let limit = limits.get(i).copied();
                    if let (Some(r), Some(limit)) = (roi.as_ref(), limit) {
                        let inside = r.contains(x, y);
                        if inside && !p.in_roi {
                            // entering the region: shorten exposure to fit the tight limit
                            let dt = p.prediction.unwrap_or(c.dt_max as u64).max(1);
                            if dt > limit {
                                let drop = (dt as f64 / limit as f64).log2().ceil() as u8;
                                p.d = p.d.saturating_sub(drop);
                            }
                        }
                        p.in_roi = inside;
                    }
                    step_pixel(p, x, y, n as u64, fs, fe, &c, limit, &mut out, &mut radial, &mut stats);
                }
                (out, radial, stats)
            })
            .collect();
        let mut events = Vec::new();
        let mut effects = Vec::new();
        for (ev, rad, st) in results {
            events.extend(ev);
            effects.extend(rad);
            self.stats.events += st.events;
            self.stats.empty_events += st.empty_events;
            self.stats.repeat_records += st.repeat_records;
            self.stats.repeated_events += st.repeated_events;
        }
        self.apply_radial(&effects);
        self.frame += 1;
        self.stats.frames += 1;
        Ok(events)
    }

    fn apply_radial(&mut self, effects: &[Radial]) {
        let c = self.config;
        let w = c.width as usize;
        for e in effects {
            match *e {
                Radial::Throttle(x, y) => {
                    for (nx, ny) in radial_targets(x, y, c.throttle_radius, c.width, c.height) {
                        if (nx, ny) != (x, y) {
                            let p = &mut self.pixels[ny as usize * w + nx as usize];
                            (p.d, p.prediction) = throttle(p.d, p.prediction);
                        }
                    }
                }
                Radial::Nudge(x, y, dir) => {
                    for (nx, ny) in radial_targets(x, y, c.minor_radius, c.width, c.height) {
                        if (nx, ny) != (x, y) {
                            let p = &mut self.pixels[ny as usize * w + nx as usize];
                            p.d = (p.d as i16 + dir as i16).clamp(0, SIM_D_MAX as i16) as D;
                        }
                    }
                }
            }
        }
    }

    /// Runs every frame and returns the concatenated events.
    pub fn run(&mut self, frames: &[Vec<u16>]) -> Result<Vec<Event>, SimError> {
        let mut out = Vec::new();
        for f in frames {
            out.extend(self.ingest_frame(f)?);
        }
        Ok(out)
    }
}

#[allow(clippy::too_many_arguments)]
fn step_pixel(
    p: &mut SimPixel,
    x: u16,
    y: u16,
    n: u64,
    fs: u64,
    fe: u64,
    c: &SimConfig,
    limit: Option<u64>,
    out: &mut Vec<Event>,
    radial: &mut Vec<Radial>,
    stats: &mut SimStats,
) {
    let dt_ref = c.dt_ref as u64;
    let mut used = 0u64;
    loop {
        let need = (1u64 << p.d.min(D_MAX).min(63)).saturating_sub(p.photons);
        if n - used < need {
            break;
        }
        used += need;
        p.photons = 0;
        // ceil keeps the event inside (fs, fe]
        let t = if n == 0 { fs } else { fs + (dt_ref * used).div_ceil(n) }.max(p.last_t);
        let dt = t - p.last_t;
        record(p, x, y, p.d, t, out, stats);
        let before = p.d;
        match c.mode {
            SimMode::Constant => {}
            SimMode::SelfAdjust => {
                adjust_self(p, dt, dt_ref);
            }
            SimMode::Radial => {
                let dir = adjust_self(p, dt, dt_ref);
                if dir != 0 {
                    radial.push(Radial::Nudge(x, y, dir));
                }
            }
            SimMode::Aggressive => {
                p.d = adjust_aggressive(p.d, Some(dt), limit.unwrap_or(c.dt_max as u64));
                p.prediction = Some(dt << (p.d as i32 - before as i32).max(0));
            }
        }
        if dt == 0 && p.d == before {
            // zero-span events carry no timing; stop draining this frame
            break;
        }
    }
    p.photons += n - used;
    if fe - p.last_t >= c.dt_max as u64 {
        record(p, x, y, D_ZERO, fe, out, stats);
        stats.empty_events += 1;
        match c.mode {
            SimMode::Constant => {}
            SimMode::SelfAdjust => (p.d, p.prediction) = throttle(p.d, p.prediction),
            SimMode::Radial => {
                (p.d, p.prediction) = throttle(p.d, p.prediction);
                radial.push(Radial::Throttle(x, y));
            }
            SimMode::Aggressive => p.d = adjust_aggressive(p.d, None, 0),
        }
    }
}

fn record(p: &mut SimPixel, x: u16, y: u16, d: D, t: u64, out: &mut Vec<Event>, stats: &mut SimStats) {
    let dt = t - p.last_t;
    if p.last_event == Some((d, dt)) {
        stats.repeated_events += 1;
        if !p.in_repeat {
            stats.repeat_records += 1;
            p.in_repeat = true;
        }
    } else {
        p.in_repeat = false;
    }
    p.last_event = Some((d, dt));
    p.last_t = t;
    stats.events += 1;
    out.push(Event::new(x, y, 0, d, t as u32));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mode: SimMode, w: u16, h: u16) -> SimConfig {
        SimConfig::new(mode, w, h)
    }

    #[test]
    fn constant_exact_division() {
        let mut s = Simulator::new(cfg(SimMode::Constant, 2, 1));
        let frames = vec![vec![256u16, 512]; 4];
        let ev = s.run(&frames).unwrap();
        let px0: Vec<_> = ev.iter().filter(|e| e.x == 0).map(|e| (e.d, e.t)).collect();
        assert_eq!(px0, vec![(8, 50), (8, 100), (8, 150), (8, 200)]);
        assert_eq!(ev.iter().filter(|e| e.x == 1).count(), 8);
        assert_eq!(s.stats.repeat_records, 2);
        assert_eq!(s.stats.empty_events, 0);
    }

    #[test]
    fn dark_pixel_goes_empty_then_throttles() {
        let mut c = cfg(SimMode::SelfAdjust, 1, 1);
        c.initial_d = 16;
        let mut s = Simulator::new(c);
        let ev = s.run(&vec![vec![0u16]; 50]).unwrap();
        assert_eq!(ev, vec![Event::new(0, 0, 0, D_ZERO, 2500)]);
        assert_eq!(s.pixel(0, 0).d, 4);
    }

    #[test]
    fn throttle_formula() {
        assert_eq!(throttle(16, Some(1200)), (4, Some(100)));
        assert_eq!(throttle(1, Some(7)), (0, Some(7)));
        assert_eq!(adjust_aggressive(5, Some(100), 300), 6);
        assert_eq!(adjust_aggressive(5, Some(200), 300), 5);
        assert_eq!(adjust_aggressive(5, None, 300), 4);
    }

    #[test]
    fn radial_square_counts() {
        assert_eq!(radial_targets(5, 5, 2, 20, 20).len(), 25);
        assert!(radial_targets(5, 5, 0, 20, 20).is_empty());
        assert_eq!(radial_targets(0, 0, 1, 20, 20).len(), 4);
    }

    #[test]
    fn conservation_constant_mode() {
        let mut c = cfg(SimMode::Constant, 3, 1);
        c.initial_d = 5;
        let mut s = Simulator::new(c);
        let frames: Vec<Vec<u16>> = (0..30u16).map(|k| vec![k * 7 + 3, 40, (k * 13) % 90]).collect();
        let ev = s.run(&frames).unwrap();
        for x in 0..3u16 {
            let emitted: u64 = ev.iter().filter(|e| e.x == x && e.d <= D_MAX).map(|e| 1u64 << e.d).sum();
            let total: u64 = frames.iter().map(|f| f[x as usize] as u64).sum();
            assert_eq!(emitted + s.pixel(x, 0).photons, total);
        }
    }

    #[test]
    fn self_adjust_settles_to_reference_rate() {
        let mut c = cfg(SimMode::SelfAdjust, 1, 1);
        c.initial_d = 2;
        let mut s = Simulator::new(c);
        s.run(&vec![vec![3000u16]; 200]).unwrap();
        let before = s.stats.events;
        s.run(&vec![vec![3000u16]; 100]).unwrap();
        let per_interval = (s.stats.events - before) as f64 / 100.0;
        assert!((0.5..=2.0).contains(&per_interval), "{per_interval}");
    }

    #[test]
    fn roi_csv() {
        let t = read_roi_track("sample_index,x,y,w,h\n3,1,2,4,4\n0,0,0,2,2\n").unwrap();
        assert_eq!(t[0].index, 0);
        assert_eq!(t[1], RoiSample { index: 3, x: 1, y: 2, w: 4, h: 4 });
        assert_eq!(t[1].distance(0, 0), 2);
        assert_eq!(t[1].distance(2, 3), 0);
    }
}
