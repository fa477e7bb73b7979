//! Motion segmentation from per-window event rates.

use crate::event::{Event, D_FILLER};

/// Binary mask for one time window, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    pub start_t: u64,
    pub width: u16,
    pub height: u16,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn get(&self, x: u16, y: u16) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// 0/255 gray image.
    pub fn to_gray(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect()
    }
}

/// Segmentation settings. `fire_threshold: None` never fires.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SegmentParams {
    pub window: u32,
    pub fire_threshold: Option<u32>,
    /// Half-size of the square closing kernel; 0 disables closing.
    pub close_radius: u16,
}

fn morph(bits: &[bool], w: usize, h: usize, r: usize, dilate: bool) -> Vec<bool> {
    let mut out = vec![false; bits.len()];
    for y in 0..h {
        for x in 0..w {
            let (y0, y1) = (y.saturating_sub(r), (y + r).min(h - 1));
            let (x0, x1) = (x.saturating_sub(r), (x + r).min(w - 1));
            let mut any = false;
            let mut all = true;
            for yy in y0..=y1 {
                for xx in x0..=x1 {
                    let b = bits[yy * w + xx];
                    any |= b;
                    all &= b;
                }
            }
            out[y * w + x] = if dilate { any } else { all };
        }
    }
    out
}

/// Morphological closing with a `(2r+1)²` square; out-of-plane neighbors are ignored.
pub fn close(bits: &[bool], w: usize, h: usize, r: usize) -> Vec<bool> {
    if r == 0 || w == 0 || h == 0 {
        return bits.to_vec();
    }
    morph(&morph(bits, w, h, r, true), w, h, r, false)
}

/// One mask per window from time zero to the last event's window. A pixel is set when
/// it fired more than `fire_threshold` events (fillers excluded) in the window.
pub fn segment_motion(events: &[Event], width: u16, height: u16, params: SegmentParams) -> Vec<Mask> {
    let (w, h) = (width as usize, height as usize);
    let window = params.window.max(1) as u64;
    let Some(last) = events.iter().map(|e| e.t as u64).max() else {
        return Vec::new();
    };
    let n_windows = (last / window + 1) as usize;
    let mut counts = vec![vec![0u32; w * h]; n_windows];
    for e in events.iter().filter(|e| e.d != D_FILLER && e.x < width && e.y < height) {
        counts[(e.t as u64 / window) as usize][e.y as usize * w + e.x as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            let raw: Vec<bool> = match params.fire_threshold {
                Some(th) => c.iter().map(|&n| n > th).collect(),
                None => vec![false; w * h],
            };
            Mask { start_t: k as u64 * window, width, height, bits: close(&raw, w, h, params.close_radius as usize) }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closing_fills_gap() {
        let (w, h) = (7, 5);
        let mut bits = vec![false; w * h];
        for x in 1..6 {
            if x != 3 {
                bits[2 * w + x] = true;
            }
        }
        let c = close(&bits, w, h, 1);
        assert!(c[2 * w + 3]);
        assert!(!c[0]);
        assert_eq!(close(&bits, w, h, 0), bits);
    }

    #[test]
    fn threshold_and_order_invariance() {
        let mut ev = Vec::new();
        for k in 0..3 {
            ev.push(Event::new(1, 1, 0, 3, 10 + k));
            ev.push(Event::new(2, 2, 0, 3, 110 + k));
        }
        ev.push(Event::new(2, 2, 0, D_FILLER, 150));
        let p = SegmentParams { window: 100, fire_threshold: Some(2), close_radius: 0 };
        let m = segment_motion(&ev, 4, 4, p);
        assert_eq!(m.len(), 2);
        assert!(m[0].get(1, 1) && m[0].count() == 1);
        assert!(m[1].get(2, 2) && m[1].count() == 1);
        let mut rev = ev.clone();
        rev.reverse();
        assert_eq!(segment_motion(&rev, 4, 4, p), m);
        let never = SegmentParams { fire_threshold: None, ..p };
        assert!(segment_motion(&ev, 4, 4, never).iter().all(|m| m.count() == 0));
    }
}
