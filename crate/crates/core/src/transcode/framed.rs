//! Framed video to events.

use rayon::prelude::*;

use super::TranscodeError;
use crate::event::{Event, PixelMode, PlaneParams, SensitivityParams};
use crate::pixel::PixelState;
use crate::vision::fast::{fast_test_pixel, FastParams};

/// Rows handled per parallel work item.
const BAND_ROWS: usize = 8;

/// Transcoder for 8-bit gray or interleaved RGB frames.
#[derive(Debug)]
pub struct FramedTranscoder {
    plane: PlaneParams,
    sens: SensitivityParams,
    pixels: Vec<PixelState>,
    frames: u64,
    feedback: Option<FeatureFeedback>,
}

/// Feature-driven threshold lowering state.
#[derive(Clone, Debug)]
struct FeatureFeedback {
    canvas: Vec<u8>,
    fast: FastParams,
    last: Vec<(u16, u16)>,
}

impl FramedTranscoder {
    pub fn new(plane: PlaneParams, sens: SensitivityParams, mode: PixelMode) -> Result<Self, TranscodeError> {
        plane.validate()?;
        sens.validate()?;
        let (w, h, ch) = (plane.width, plane.height, plane.channels);
        let mut pixels = Vec::with_capacity(plane.pixel_count() * ch as usize);
        for y in 0..h {
            for x in 0..w {
                for c in 0..ch {
                    let mut p = PixelState::new(x, y, c, mode, plane.dt_ref);
                    p.set_threshold(sens.m as u16);
                    pixels.push(p);
                }
            }
        }
        Ok(Self { plane, sens, pixels, frames: 0, feedback: None })
    }

    /// Enables FAST detection on pixels that fire, lowering thresholds around features.
    pub fn with_feature_feedback(mut self, fast: FastParams) -> Self {
        self.set_feature_feedback(Some(fast));
        self
    }

    /// Switches feature feedback on or off between frames, keeping pixel state.
    pub fn set_feature_feedback(&mut self, fast: Option<FastParams>) {
        match (fast, self.feedback.as_mut()) {
            (None, _) => self.feedback = None,
            (Some(f), Some(fb)) => fb.fast = f,
            (Some(f), None) => {
                self.feedback = Some(FeatureFeedback { canvas: vec![0; self.plane.pixel_count()], fast: f, last: Vec::new() })
            }
        }
    }

    pub fn feature_feedback_enabled(&self) -> bool {
        self.feedback.is_some()
    }

    pub fn plane(&self) -> &PlaneParams {
        &self.plane
    }

    pub fn sensitivity(&self) -> SensitivityParams {
        self.sens
    }

    /// Takes effect at the next frame.
    pub fn set_sensitivity(&mut self, sens: SensitivityParams) -> Result<(), TranscodeError> {
        sens.validate()?;
        self.sens = sens;
        Ok(())
    }

    pub fn frames_processed(&self) -> u64 {
        self.frames
    }

    pub fn pixels(&self) -> &[PixelState] {
        &self.pixels
    }

    /// Features detected on the most recent frame.
    pub fn last_features(&self) -> &[(u16, u16)] {
        self.feedback.as_ref().map_or(&[], |f| &f.last)
    }

    /// Integrates one frame; each pixel receives its value over Δt_ref ticks.
    pub fn transcode_frame(&mut self, frame: &[u8]) -> Result<Vec<Event>, TranscodeError> {
        let expected = self.pixels.len();
        if frame.len() != expected {
            return Err(TranscodeError::FrameSize { expected, got: frame.len() });
        }
        let dt_ref = self.plane.dt_ref as u64;
        if (self.frames + 1) * dt_ref > u32::MAX as u64 {
            return Err(TranscodeError::TimeOverflow);
        }
        let (dt_max, sens) = (self.plane.dt_max, self.sens);
        let band = BAND_ROWS * self.plane.width as usize * self.plane.channels as usize;
        let bands: Vec<Vec<Event>> = self
            .pixels
            .par_chunks_mut(band)
            .zip(frame.par_chunks(band))
            .map(|(pixels, values)| {
                let mut out = Vec::new();
                for (p, &v) in pixels.iter_mut().zip(values) {
                    p.process(v as f64, dt_ref, dt_max, &sens, &mut out);
                }
                out
            })
            .collect();
        let events = bands.concat();
        self.frames += 1;
        if self.feedback.is_some() {
            self.run_feedback(frame, &events);
        }
        Ok(events)
    }

    fn run_feedback(&mut self, frame: &[u8], events: &[Event]) {
        let (w, ch) = (self.plane.width as usize, self.plane.channels as usize);
        let h = self.plane.height as usize;
        let fb = self.feedback.as_mut().unwrap();
        let mut dirty = Vec::new();
        for e in events.iter().filter(|e| e.c == 0) {
            let p = e.y as usize * w + e.x as usize;
            let sum: u32 = frame[p * ch..p * ch + ch].iter().map(|&v| v as u32).sum();
            fb.canvas[p] = (sum / ch as u32) as u8;
            dirty.push((e.x, e.y));
        }
        dirty.sort_unstable();
        dirty.dedup();
        fb.last = dirty
            .into_iter()
            .filter(|&(x, y)| fast_test_pixel(&fb.canvas, w, h, x as usize, y as usize, &fb.fast))
            .collect();
        let points = fb.last.clone();
        self.feature_feedback(&points, self.sens.feature_radius);
    }

    /// Lowers the threshold of every pixel within Chebyshev `radius` of a feature to the
    /// lossless baseline. Returns the number of pixel positions touched.
    pub fn feature_feedback(&mut self, points: &[(u16, u16)], radius: u16) -> usize {
        let (w, h, ch) = (self.plane.width as i32, self.plane.height as i32, self.plane.channels as usize);
        let mut touched = vec![false; (w * h) as usize];
        let r = radius as i32;
        for &(fx, fy) in points {
            for y in (fy as i32 - r).max(0)..=(fy as i32 + r).min(h - 1) {
                for x in (fx as i32 - r).max(0)..=(fx as i32 + r).min(w - 1) {
                    touched[(y * w + x) as usize] = true;
                }
            }
        }
        let mut count = 0;
        for (p, _) in touched.iter().enumerate().filter(|(_, t)| **t) {
            count += 1;
            for c in 0..ch {
                self.pixels[p * ch + c].apply_application_sensitivity(SensitivityParams::LOSSLESS.m as u16);
            }
        }
        count
    }

    /// Closes every pixel's current level.
    pub fn finish(&mut self) -> Vec<Event> {
        let band = BAND_ROWS * self.plane.width as usize * self.plane.channels as usize;
        self.pixels
            .par_chunks_mut(band)
            .map(|pixels| {
                let mut out = Vec::new();
                for p in pixels {
                    p.end_level(&mut out);
                }
                out
            })
            .collect::<Vec<_>>()
            .concat()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{SourceKind, D_FILLER, D_ZERO};

    fn plane(w: u16, h: u16, dt_max_frames: u32) -> PlaneParams {
        PlaneParams {
            width: w,
            height: h,
            channels: 1,
            dt_s: 255 * 30,
            dt_ref: 255,
            dt_max: 255 * dt_max_frames,
            source_kind: SourceKind::Framed,
        }
    }

    #[test]
    fn rejects_wrong_frame_size() {
        let mut t = FramedTranscoder::new(plane(4, 4, 10), SensitivityParams::LOSSLESS, PixelMode::Collapse).unwrap();
        assert!(matches!(t.transcode_frame(&[0; 15]), Err(TranscodeError::FrameSize { expected: 16, got: 15 })));
    }

    #[test]
    fn alternating_frames_fire_every_frame() {
        let mut t = FramedTranscoder::new(plane(4, 4, 10), SensitivityParams::LOSSLESS, PixelMode::Collapse).unwrap();
        let mut counts = Vec::new();
        for k in 0..6 {
            let v = if k % 2 == 0 { 0 } else { 255 };
            counts.push(t.transcode_frame(&[v; 16]).unwrap().len());
        }
        counts.push(t.finish().len());
        // every frame after the first closes the previous frame's level in each pixel
        assert!(counts[1..].iter().all(|&c| c >= 16), "{counts:?}");
    }

    #[test]
    fn terminators_align_to_frames() {
        let mut t = FramedTranscoder::new(plane(3, 3, 7), SensitivityParams::LOSSLESS, PixelMode::Collapse).unwrap();
        let mut events = Vec::new();
        for k in 0..40u32 {
            let frame: Vec<u8> = (0..9u32).map(|i| ((i * 31 + (k / 3) * 17) % 256) as u8).collect();
            events.extend(t.transcode_frame(&frame).unwrap());
        }
        events.extend(t.finish());
        for e in events.iter().filter(|e| e.d == D_FILLER) {
            assert_eq!(e.t % 255, 0, "{e:?}");
        }
        for e in events.iter().filter(|e| e.d == D_ZERO) {
            assert!(e.t % 255 == 0 || e.t % (255 * 7) == 0, "{e:?}");
        }
    }

    #[test]
    fn feature_feedback_square() {
        let mut t = FramedTranscoder::new(plane(20, 20, 10), SensitivityParams::LOSSLESS, PixelMode::Collapse).unwrap();
        assert_eq!(t.feature_feedback(&[(10, 10)], 2), 25);
        assert_eq!(t.feature_feedback(&[(10, 10)], 0), 1);
        assert_eq!(t.feature_feedback(&[(0, 0)], 2), 9);
    }

    #[test]
    fn per_pixel_time_is_monotone() {
        let mut t = FramedTranscoder::new(plane(5, 5, 4), SensitivityParams::LOSSLESS, PixelMode::List).unwrap();
        let mut events = Vec::new();
        for k in 0..30u32 {
            let frame: Vec<u8> = (0..25u32).map(|i| ((i * 13 + k * k * 7) % 256) as u8).collect();
            events.extend(t.transcode_frame(&frame).unwrap());
        }
        events.extend(t.finish());
        let mut last = std::collections::HashMap::new();
        for e in events {
            let prev = last.insert((e.x, e.y), e.t).unwrap_or(0);
            assert!(e.t >= prev);
        }
    }
}
