//! FAST segment-test corners: a per-pixel test for asynchronous use and an independent
//! dense frame detector.

use serde::{Deserialize, Serialize};

/// Bresenham circle of radius 3, clockwise from 12 o'clock.
pub const CIRCLE: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

const RADIUS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FastParams {
    pub threshold: u8,
    /// Minimum contiguous arc length.
    pub n: u8,
}

impl Default for FastParams {
    fn default() -> Self {
        Self { threshold: 10, n: 9 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeaturePoint {
    pub x: u16,
    pub y: u16,
    pub t: u32,
}

fn interior(w: usize, h: usize, x: usize, y: usize) -> bool {
    x >= RADIUS && y >= RADIUS && x + RADIUS < w && y + RADIUS < h
}

/// Segment test at one pixel. Border pixels whose circle leaves the plane are never
/// corners.
pub fn fast_test_pixel(canvas: &[u8], w: usize, h: usize, x: usize, y: usize, params: &FastParams) -> bool {
    if !interior(w, h, x, y) {
        return false;
    }
    let center = canvas[y * w + x] as i32;
    let th = params.threshold as i32;
    let n = params.n as usize;
    let (mut bright, mut dark) = (0usize, 0usize);
    // two laps so arcs that wrap past 12 o'clock are counted whole
    for k in 0..32 {
        let (dx, dy) = CIRCLE[k % 16];
        let v = canvas[(y as i32 + dy) as usize * w + (x as i32 + dx) as usize] as i32;
        bright = if v > center + th { bright + 1 } else { 0 };
        dark = if v < center - th { dark + 1 } else { 0 };
        if bright >= n || dark >= n {
            return true;
        }
    }
    false
}

/// Dense detector over a whole frame, built on 16-bit circle masks and rotations.
/// Returns corners in row-major order.
pub fn fast_dense(canvas: &[u8], w: usize, h: usize, params: &FastParams) -> Vec<(u16, u16)> {
    let n = params.n.clamp(1, 16) as u32;
    let want: u16 = if n == 16 { u16::MAX } else { (1u16 << n) - 1 };
    let offsets: Vec<isize> = CIRCLE.iter().map(|&(dx, dy)| dy as isize * w as isize + dx as isize).collect();
    let th = params.threshold as i16;
    let mut out = Vec::new();
    if w <= 2 * RADIUS || h <= 2 * RADIUS {
        return out;
    }
    for y in RADIUS..h - RADIUS {
        for x in RADIUS..w - RADIUS {
            let idx = (y * w + x) as isize;
            let c = canvas[idx as usize] as i16;
            let (mut hi, mut lo) = (0u16, 0u16);
            for (bit, off) in offsets.iter().enumerate() {
                let v = canvas[(idx + off) as usize] as i16;
                hi |= ((v - c > th) as u16) << bit;
                lo |= ((c - v > th) as u16) << bit;
            }
            let arc = |m: u16| m.count_ones() >= n && (0..16).any(|r| m.rotate_right(r) & want == want);
            if arc(hi) || arc(lo) {
                out.push((x as u16, y as u16));
            }
        }
    }
    out
}

/// Single intensity canvas with per-event corner tests and a dirty queue for batched
/// tests. `tests` counts segment tests performed.
#[derive(Clone, Debug)]
pub struct AsyncDetector {
    pub width: usize,
    pub height: usize,
    pub params: FastParams,
    canvas: Vec<u8>,
    dirty: Vec<usize>,
    is_dirty: Vec<bool>,
    pub tests: u64,
}

impl AsyncDetector {
    pub fn new(width: usize, height: usize, params: FastParams) -> Self {
        Self {
            width,
            height,
            params,
            canvas: vec![0; width * height],
            dirty: Vec::new(),
            is_dirty: vec![false; width * height],
            tests: 0,
        }
    }

    pub fn canvas(&self) -> &[u8] {
        &self.canvas
    }

    pub fn set_canvas(&mut self, canvas: &[u8]) {
        self.canvas.copy_from_slice(canvas);
    }

    /// Writes one pixel and queues it for the next [`Self::detect_dirty`].
    pub fn update(&mut self, x: u16, y: u16, value: u8) {
        let i = y as usize * self.width + x as usize;
        self.canvas[i] = value;
        if !self.is_dirty[i] {
            self.is_dirty[i] = true;
            self.dirty.push(i);
        }
    }

    /// Writes one pixel and tests only that pixel.
    pub fn on_event(&mut self, x: u16, y: u16, t: u32, value: u8) -> Option<FeaturePoint> {
        self.canvas[y as usize * self.width + x as usize] = value;
        self.test(x as usize, y as usize).then_some(FeaturePoint { x, y, t })
    }

    /// Tests every queued pixel once, in row-major order, and clears the queue.
    pub fn detect_dirty(&mut self, t: u32) -> Vec<FeaturePoint> {
        let mut dirty = std::mem::take(&mut self.dirty);
        dirty.sort_unstable();
        let mut out = Vec::new();
        for i in dirty {
            self.is_dirty[i] = false;
            let (x, y) = (i % self.width, i / self.width);
            if self.test(x, y) {
                out.push(FeaturePoint { x: x as u16, y: y as u16, t });
            }
        }
        out
    }

    fn test(&mut self, x: usize, y: usize) -> bool {
        self.tests += 1;
        fast_test_pixel(&self.canvas, self.width, self.height, x, y, &self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn async_all(canvas: &[u8], w: usize, h: usize, p: &FastParams) -> Vec<(u16, u16)> {
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if fast_test_pixel(canvas, w, h, x, y, p) {
                    out.push((x as u16, y as u16));
                }
            }
        }
        out
    }

    #[test]
    fn uniform_has_no_corners() {
        let c = vec![77u8; 20 * 20];
        assert!(async_all(&c, 20, 20, &FastParams::default()).is_empty());
        assert!(fast_dense(&c, 20, 20, &FastParams::default()).is_empty());
    }

    #[test]
    fn quadrant_corner() {
        let (w, h) = (20, 20);
        let mut c = vec![0u8; w * h];
        for y in 10..h {
            for x in 10..w {
                c[y * w + x] = 200;
            }
        }
        let p = FastParams::default();
        assert!(fast_test_pixel(&c, w, h, 10, 10, &p));
        assert!(!fast_test_pixel(&c, w, h, 15, 15, &p));
        assert_eq!(async_all(&c, w, h, &p), fast_dense(&c, w, h, &p));
    }

    #[test]
    fn random_canvases_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (w, h) = (rng.random_range(1..30), rng.random_range(1..30));
            let c: Vec<u8> = (0..w * h).map(|_| rng.random_range(0..4u8) * 60).collect();
            let p = FastParams { threshold: rng.random_range(0..40), n: rng.random_range(9..=12) };
            assert_eq!(async_all(&c, w, h, &p), fast_dense(&c, w, h, &p));
        }
    }

    #[test]
    fn dirty_queue_counts_tests() {
        let mut d = AsyncDetector::new(16, 16, FastParams::default());
        d.update(3, 3, 4);
        d.update(3, 3, 6);
        d.update(8, 8, 5);
        assert!(d.detect_dirty(0).is_empty());
        assert_eq!(d.tests, 2);
        assert!(d.detect_dirty(1).is_empty());
        assert_eq!(d.tests, 2);
    }
}
