//! Per-frame quality and rolling bitrate reporting.

use std::collections::VecDeque;

use eventforge_core::frame::Frame;
use eventforge_core::metrics::{quality, Quality};
use serde::Serialize;

use crate::error::Result;

/// Sliding sum over the most recent `len` samples.
#[derive(Clone, Debug)]
pub struct RollingSum {
    len: usize,
    values: VecDeque<u64>,
    sum: u64,
}

impl RollingSum {
    pub fn new(len: usize) -> Self {
        Self { len: len.max(1), values: VecDeque::new(), sum: 0 }
    }

    pub fn push(&mut self, v: u64) {
        self.values.push_back(v);
        self.sum += v;
        if self.values.len() > self.len {
            self.sum -= self.values.pop_front().unwrap();
        }
    }

    /// Mean per sample over the filled part of the window.
    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.sum as f64 / self.values.len() as f64
        }
    }
}

/// One reconstructed frame compared with its source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrameMetrics {
    pub frame: u64,
    pub mse: f64,
    pub psnr: f64,
    pub ssim: f64,
    /// Uncompressed source bytes per second.
    pub source_bytes_per_s: f64,
    pub adder_events_per_s: f64,
    pub adder_bytes_per_s: f64,
}

/// Quality and rate summary of a transcode.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MetricsReport {
    pub frames: Vec<FrameMetrics>,
}

impl MetricsReport {
    /// Compares reconstructed frames with sources. `events_per_frame[k]` counts events
    /// whose timestamps fall in frame `k`; rates are averaged over one second of frames.
    pub fn build(sources: &[Frame], recon: &[Frame], events_per_frame: &[u64], event_size: usize, fps: f64) -> Result<Self> {
        let window = fps.round().max(1.0) as usize;
        let mut events = RollingSum::new(window);
        let mut frames = Vec::with_capacity(sources.len());
        for (k, (s, r)) in sources.iter().zip(recon).enumerate() {
            let Quality { mse, psnr, ssim } =
                quality(&s.data, &r.data, s.width as usize, s.height as usize, s.channels as usize)?;
            events.push(events_per_frame.get(k).copied().unwrap_or(0));
            let eps = events.mean() * fps;
            frames.push(FrameMetrics {
                frame: k as u64,
                mse,
                psnr,
                ssim,
                source_bytes_per_s: s.data.len() as f64 * fps,
                adder_events_per_s: eps,
                adder_bytes_per_s: eps * event_size as f64,
            });
        }
        Ok(Self { frames })
    }

    fn mean(&self, f: impl Fn(&FrameMetrics) -> f64) -> f64 {
        if self.frames.is_empty() {
            return 0.0;
        }
        self.frames.iter().map(f).sum::<f64>() / self.frames.len() as f64
    }

    pub fn mean_mse(&self) -> f64 {
        self.mean(|m| m.mse)
    }

    pub fn mean_psnr(&self) -> f64 {
        self.mean(|m| m.psnr)
    }

    pub fn mean_ssim(&self) -> f64 {
        self.mean(|m| m.ssim)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for m in &self.frames {
            w.serialize(m)?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| crate::error::CliError::format(e.to_string()))?).unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rolling_sum_window() {
        let mut r = RollingSum::new(3);
        assert_eq!(r.mean(), 0.0);
        for v in [3, 6, 9, 12] {
            r.push(v);
        }
        assert_eq!(r.mean(), 9.0);
    }

    #[test]
    fn report_on_offset_frames() {
        let a = Frame::from_data(16, 16, 1, vec![100; 256]).unwrap();
        let b = Frame::from_data(16, 16, 1, vec![101; 256]).unwrap();
        let rep = MetricsReport::build(&[a.clone(), a.clone()], &[b, a], &[10, 20], 9, 2.0).unwrap();
        assert_eq!(rep.frames[0].mse, 1.0);
        assert!((rep.frames[0].psnr - 48.1308).abs() < 1e-3);
        assert_eq!(rep.frames[1].ssim, 1.0);
        assert_eq!(rep.frames[1].adder_events_per_s, 30.0);
        assert_eq!(rep.frames[1].adder_bytes_per_s, 270.0);
        assert_eq!(rep.frames[0].source_bytes_per_s, 512.0);
        assert!(rep.to_csv().unwrap().starts_with("frame,mse,psnr,ssim"));
    }
}
