//! Deterministic synthetic sources for tests, benchmarks and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dvs::DvsEvent;
use crate::frame::Frame;
use crate::sim::RoiSample;
use crate::transcode::dvs::{latent_update, MID_GRAY};

fn gradient(x: usize, y: usize, w: usize, h: usize) -> f64 {
    30.0 + 150.0 * x as f64 / w.max(1) as f64 + 40.0 * y as f64 / h.max(1) as f64
}

#[derive(Clone, Copy, Debug)]
struct Square {
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    size: usize,
    value: u8,
}

impl Square {
    fn step(&mut self, w: usize, h: usize) {
        self.x += self.vx;
        self.y += self.vy;
        let (maxx, maxy) = ((w - self.size.min(w)) as f64, (h - self.size.min(h)) as f64);
        if self.x < 0.0 || self.x > maxx {
            self.vx = -self.vx;
            self.x = self.x.clamp(0.0, maxx);
        }
        if self.y < 0.0 || self.y > maxy {
            self.vy = -self.vy;
            self.y = self.y.clamp(0.0, maxy);
        }
    }

    fn covers(&self, x: usize, y: usize) -> bool {
        let (sx, sy) = (self.x.round() as usize, self.y.round() as usize);
        x >= sx && x < sx + self.size && y >= sy && y < sy + self.size
    }
}

fn squares(rng: &mut ChaCha8Rng, w: usize, h: usize, count: usize) -> Vec<Square> {
    (0..count)
        .map(|k| {
            let size = (w.min(h) / 6).max(2);
            Square {
                x: rng.random_range(0.0..(w - size.min(w)) as f64 + 1.0),
                y: rng.random_range(0.0..(h - size.min(h)) as f64 + 1.0),
                vx: rng.random_range(0.5..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 },
                vy: rng.random_range(0.5..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 },
                size,
                value: [235, 15, 180][k % 3],
            }
        })
        .collect()
}

/// Gradient background with bouncing squares.
pub fn moving_squares(width: u16, height: u16, frames: usize, seed: u64) -> Vec<Frame> {
    let (w, h) = (width as usize, height as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sq = squares(&mut rng, w, h, 3);
    (0..frames)
        .map(|_| {
            let mut f = Frame::new(width, height, 1);
            for y in 0..h {
                for x in 0..w {
                    let v = sq.iter().find(|s| s.covers(x, y)).map_or(gradient(x, y, w, h) as u8, |s| s.value);
                    f.data[y * w + x] = v;
                }
            }
            sq.iter_mut().for_each(|s| s.step(w, h));
            f
        })
        .collect()
}

/// Static textured scene plus uniform per-frame noise of `±amplitude`.
pub fn static_noise(width: u16, height: u16, frames: usize, amplitude: u8, seed: u64) -> Vec<Frame> {
    let (w, h) = (width as usize, height as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<f64> = (0..w * h).map(|i| gradient(i % w, i / w, w, h) + rng.random_range(-10.0..10.0)).collect();
    (0..frames)
        .map(|_| {
            let data = base
                .iter()
                .map(|&b| {
                    let n = if amplitude == 0 { 0 } else { rng.random_range(-(amplitude as i32)..=amplitude as i32) };
                    (b as i32 + n).clamp(0, 255) as u8
                })
                .collect();
            Frame::from_data(width, height, 1, data).unwrap()
        })
        .collect()
}

/// Mostly static scene with mild sensor noise and small slow movers.
pub fn surveillance(width: u16, height: u16, frames: usize, seed: u64) -> Vec<Frame> {
    let (w, h) = (width as usize, height as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blobs: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.random_range(0.0..w as f64),
                rng.random_range(0.0..h as f64),
                rng.random_range(4.0..w as f64 / 3.0),
                rng.random_range(-60.0..60.0),
            )
        })
        .collect();
    let base: Vec<f64> = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            let mut v = 90.0 + 40.0 * y / h as f64;
            for &(bx, by, r, a) in &blobs {
                let d2 = (x - bx).powi(2) + (y - by).powi(2);
                v += a * (-d2 / (2.0 * r * r)).exp();
            }
            v.clamp(5.0, 250.0)
        })
        .collect();
    let mut movers: Vec<Square> = squares(&mut rng, w, h, 2)
        .into_iter()
        .map(|mut s| {
            s.size = (w.min(h) / 10).max(2);
            s.vx = s.vx.signum() * 0.5;
            s.vy = 0.0;
            s
        })
        .collect();
    (0..frames)
        .map(|_| {
            let mut f = Frame::new(width, height, 1);
            for (i, &b) in base.iter().enumerate() {
                let (x, y) = (i % w, i / w);
                let v = match movers.iter().find(|s| s.covers(x, y)) {
                    Some(s) => s.value as f64,
                    None => b + rng.random_range(-1.5..1.5),
                };
                f.data[i] = v.round().clamp(0.0, 255.0) as u8;
            }
            movers.iter_mut().for_each(|s| s.step(w, h));
            f
        })
        .collect()
}

/// Ground-truth contrast events. Each pixel fires at random times at least `min_gap`
/// ticks apart and at least `min_gap` ticks away from latent reset boundaries, with
/// polarities that keep the latent intensity inside (0.1, 0.95) so no update clamps.
pub fn dvs_stream(width: u16, height: u16, duration: u32, min_gap: u32, theta: f64, reset_interval: u32, seed: u64) -> Vec<DvsEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let reset = if reset_interval == 0 { u64::MAX } else { reset_interval as u64 };
    let gap = min_gap.max(1) as u64;
    for y in 0..height {
        for x in 0..width {
            let mut l = MID_GRAY;
            let mut t = rng.random_range(gap..3 * gap);
            let mut epoch = 0u64;
            while t < duration as u64 {
                if t / reset != epoch {
                    epoch = t / reset;
                    l = MID_GRAY;
                }
                let into = t % reset;
                if into < gap || reset - into < gap {
                    t += gap;
                    continue;
                }
                let mut p: i8 = if rng.random::<bool>() { 1 } else { -1 };
                let next = latent_update(l, p, theta);
                if !(0.1..0.95).contains(&next) {
                    p = -p;
                }
                l = latent_update(l, p, theta);
                out.push(DvsEvent::new(x, y, p, t as u32));
                t += gap + rng.random_range(0..4 * gap);
            }
        }
    }
    out.sort_by_key(|e| e.t);
    out
}

/// Photon frames whose values are positive multiples of `2^d`.
pub fn photon_multiples(width: u16, height: u16, frames: usize, d: u8, max_multiple: u16, seed: u64) -> Vec<Vec<u16>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = 1u32 << d;
    (0..frames)
        .map(|_| {
            (0..width as usize * height as usize)
                .map(|_| (rng.random_range(1..=max_multiple as u32) * unit).min(u16::MAX as u32) as u16)
                .collect()
        })
        .collect()
}

/// Static photon background with one bright square crossing it, and the square's track
/// as replayable ROI samples.
pub fn photon_mover(width: u16, height: u16, frames: usize, size: u16, seed: u64) -> (Vec<Vec<u16>>, Vec<RoiSample>) {
    let (w, h) = (width as usize, height as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<u16> = (0..w * h).map(|_| rng.random_range(300..900)).collect();
    let y0 = height.saturating_sub(size) / 2;
    let mut out = Vec::with_capacity(frames);
    let mut track = Vec::with_capacity(frames);
    let span = width.saturating_sub(size).max(1) as usize;
    for k in 0..frames {
        // ping-pong one pixel per frame
        let phase = k % (2 * span);
        let x0 = if phase < span { phase } else { 2 * span - phase } as u16;
        let mut f = base.clone();
        for y in y0..(y0 + size).min(height) {
            for x in x0..(x0 + size).min(width) {
                f[y as usize * w + x as usize] = 6000;
            }
        }
        out.push(f);
        track.push(RoiSample { index: k as u64, x: x0.saturating_sub(1), y: y0.saturating_sub(1), w: size + 2, h: size + 2 });
    }
    (out, track)
}
