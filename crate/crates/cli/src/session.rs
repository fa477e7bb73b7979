//! Live transcode session driven one input unit at a time. Control messages are applied
//! between units.

use eventforge_core::crf::crf_sensitivity;
use eventforge_core::event::sort_by_time;
use eventforge_core::frame::Frame;
use eventforge_core::metrics::quality;
use eventforge_core::reconstruct::{Framer, LiveView};
use eventforge_core::sim::{RoiSample, SimConfig, Simulator};
use eventforge_core::transcode::{FramedTranscoder, TranscodeError};
use eventforge_core::vision::FastParams;
use eventforge_core::{Event, PixelMode, PlaneParams, SensitivityParams, SourceKind};

use crate::protocol::{Control, Features, SessionState, Tick, View};
use crate::report::RollingSum;

/// Reference intervals per Δt_max for live sessions.
pub const LIVE_DT_MAX_REFS: u32 = 30;
/// Metric ticks per second of stream time for event sources.
const EVENT_TICKS_PER_S: f64 = 30.0;
const I_MAX: f64 = 255.0;

/// What a session plays.
#[derive(Clone, Debug)]
pub enum SourceSpec {
    /// Framed video, looped.
    Video { frames: Vec<Frame>, fps: f64 },
    /// Photon frames through the sensor simulator, looped.
    Simulator { config: SimConfig, frames: Vec<Vec<u16>>, roi: Vec<RoiSample> },
}

/// One message produced by a step.
#[derive(Clone, Debug, PartialEq)]
pub enum Output {
    Tick(Tick),
    Preview(Vec<u8>),
    Features(Features),
}

struct VideoPipe {
    frames: Vec<Frame>,
    fps: f64,
    plane: PlaneParams,
    tc: FramedTranscoder,
}

struct SimPipe {
    config: SimConfig,
    frames: Vec<Vec<u16>>,
    roi: Vec<RoiSample>,
    sim: Simulator,
    per_unit: usize,
}

enum Pipe {
    Video(VideoPipe),
    Sim(SimPipe),
}

pub struct Session {
    pipe: Pipe,
    sens: SensitivityParams,
    crf: Option<u8>,
    view: View,
    features: bool,
    paused: bool,
    /// Units processed since the session started.
    unit: u64,
    /// Units since the pipeline was last rebuilt; stream time restarts on rebuild.
    local_unit: u64,
    /// Position of the next source frame.
    pos: usize,
    framer: Framer,
    live: LiveView,
    events: RollingSum,
}

fn framer_for(plane: &PlaneParams) -> (Framer, LiveView) {
    (Framer::new(*plane, plane.dt_ref, None), LiveView::new(*plane, I_MAX, plane.dt_ref))
}

impl Session {
    pub fn new(source: SourceSpec, crf: u8) -> Result<Self, String> {
        let sens = crf_sensitivity(crf).map_err(|e| e.to_string())?;
        let pipe = match source {
            SourceSpec::Video { frames, fps } => {
                let first = frames.first().ok_or("video has no frames")?;
                if !(fps.is_finite() && fps > 0.0) {
                    return Err(format!("invalid frame rate {fps}"));
                }
                let dt_ref = 255;
                let plane = PlaneParams {
                    width: first.width,
                    height: first.height,
                    channels: first.channels,
                    dt_s: (fps.round().max(1.0) as u32) * dt_ref,
                    dt_ref,
                    dt_max: dt_ref * LIVE_DT_MAX_REFS,
                    source_kind: SourceKind::Framed,
                };
                let tc = FramedTranscoder::new(plane, sens, PixelMode::Collapse).map_err(|e| e.to_string())?;
                Pipe::Video(VideoPipe { frames, fps, plane, tc })
            }
            SourceSpec::Simulator { config, frames, roi } => {
                if frames.is_empty() {
                    return Err("simulator source has no frames".into());
                }
                config.plane().validate().map_err(|e| e.to_string())?;
                let per_unit = ((config.dt_s as f64 / config.dt_ref as f64 / EVENT_TICKS_PER_S).round() as usize).max(1);
                let sim = Simulator::new(config).with_roi_track(roi.clone());
                Pipe::Sim(SimPipe { config, frames, roi, sim, per_unit })
            }
        };
        let plane = match &pipe {
            Pipe::Video(v) => v.plane,
            Pipe::Sim(s) => s.config.plane(),
        };
        let (framer, live) = framer_for(&plane);
        let window = match &pipe {
            Pipe::Video(v) => v.fps.round().max(1.0) as usize,
            Pipe::Sim(_) => EVENT_TICKS_PER_S as usize,
        };
        Ok(Self {
            pipe,
            sens,
            crf: Some(crf),
            view: View::Intensity,
            features: false,
            paused: false,
            unit: 0,
            local_unit: 0,
            pos: 0,
            framer,
            live,
            events: RollingSum::new(window),
        })
    }

    pub fn plane(&self) -> PlaneParams {
        match &self.pipe {
            Pipe::Video(v) => v.plane,
            Pipe::Sim(s) => s.config.plane(),
        }
    }

    /// Input units per second of stream time.
    pub fn units_per_s(&self) -> f64 {
        match &self.pipe {
            Pipe::Video(v) => v.fps,
            Pipe::Sim(s) => s.config.dt_s as f64 / (s.config.dt_ref as f64 * s.per_unit as f64),
        }
    }

    pub fn paused(&self) -> bool {
        self.paused
    }

    pub fn state(&self) -> SessionState {
        let p = self.plane();
        SessionState {
            source: match self.pipe {
                Pipe::Video(_) => "video",
                Pipe::Sim(_) => "simulator",
            }
            .into(),
            width: p.width,
            height: p.height,
            crf: self.crf,
            m: self.sens.m,
            m_max: self.sens.m_max,
            m_v: self.sens.m_v,
            feature_radius: self.sens.feature_radius,
            dt_ref: p.dt_ref,
            dt_max: p.dt_max,
            view: self.view,
            features: self.features,
            paused: self.paused,
            unit: self.unit,
            units_per_s: self.units_per_s(),
        }
    }

    /// Restarts stream time with the current plane and settings.
    fn rebuild(&mut self, plane: PlaneParams) -> Result<(), String> {
        match &mut self.pipe {
            Pipe::Video(v) => {
                let mut tc = FramedTranscoder::new(plane, self.sens, PixelMode::Collapse).map_err(|e| e.to_string())?;
                if self.features {
                    tc.set_feature_feedback(Some(FastParams::default()));
                }
                v.tc = tc;
                v.plane = plane;
            }
            Pipe::Sim(s) => {
                let mut config = s.config;
                config.dt_ref = plane.dt_ref;
                config.dt_max = plane.dt_max;
                config.plane().validate().map_err(|e| e.to_string())?;
                s.config = config;
                s.sim = Simulator::new(config).with_roi_track(s.roi.clone());
            }
        }
        (self.framer, self.live) = framer_for(&plane);
        self.local_unit = 0;
        Ok(())
    }

    /// Applies a control message. Returns a warning for accepted but questionable values.
    pub fn apply(&mut self, c: &Control) -> Result<Option<String>, String> {
        let is_video = matches!(self.pipe, Pipe::Video(_));
        match *c {
            Control::SetCrf { crf } => {
                if !is_video {
                    return Err("set_crf applies to video sources only".into());
                }
                let sens = crf_sensitivity(crf).map_err(|e| e.to_string())?;
                self.set_sensitivity(sens)?;
                self.crf = Some(crf);
            }
            Control::SetParams { dt_ref, dt_max, m, m_max, m_v, feature_radius } => {
                let thresholds = m.is_some() || m_max.is_some() || m_v.is_some() || feature_radius.is_some();
                if thresholds && !is_video {
                    return Err("threshold overrides apply to video sources only".into());
                }
                let sens = SensitivityParams {
                    m: m.unwrap_or(self.sens.m),
                    m_max: m_max.unwrap_or(self.sens.m_max),
                    m_v: m_v.unwrap_or(self.sens.m_v),
                    feature_radius: feature_radius.unwrap_or(self.sens.feature_radius),
                };
                sens.validate().map_err(|e| e.to_string())?;
                let mut plane = self.plane();
                if let Some(r) = dt_ref {
                    let old = plane.dt_ref;
                    plane.dt_ref = r;
                    if plane.source_kind == SourceKind::Framed {
                        plane.dt_s = plane.dt_s / old.max(1) * r;
                    }
                }
                if let Some(m) = dt_max {
                    plane.dt_max = m;
                }
                plane.validate().map_err(|e| e.to_string())?;
                if thresholds {
                    self.set_sensitivity(sens)?;
                    self.crf = None;
                }
                if plane != self.plane() {
                    self.rebuild(plane)?;
                }
                if is_video {
                    return Ok(plane.dt_ref_warning(I_MAX as u32));
                }
            }
            Control::ToggleFeatures { enabled } => {
                let Pipe::Video(v) = &mut self.pipe else {
                    return Err("feature detection applies to video sources only".into());
                };
                self.features = enabled.unwrap_or(!self.features);
                v.tc.set_feature_feedback(self.features.then(FastParams::default));
            }
            Control::ToggleView { view } => self.view = view,
            Control::Pause { paused } => self.paused = paused.unwrap_or(!self.paused),
            Control::SeekAdu { index } => {
                let p = self.plane();
                let units_per_adu = (p.dt_max / p.dt_ref).max(1) as u64;
                let len = match &self.pipe {
                    Pipe::Video(v) => v.frames.len() as u64,
                    Pipe::Sim(s) => s.frames.len() as u64,
                };
                let frame = index.saturating_mul(units_per_adu);
                if frame >= len {
                    return Err(format!("ADU {index} is past the end of the source ({len} frames)"));
                }
                self.pos = frame as usize;
                self.rebuild(p)?;
            }
        }
        Ok(None)
    }

    fn set_sensitivity(&mut self, sens: SensitivityParams) -> Result<(), String> {
        if let Pipe::Video(v) = &mut self.pipe {
            v.tc.set_sensitivity(sens).map_err(|e| e.to_string())?;
        }
        self.sens = sens;
        Ok(())
    }

    /// Processes one input unit unless paused.
    pub fn step(&mut self) -> Result<Vec<Output>, String> {
        if self.paused {
            return Ok(Vec::new());
        }
        let (mut events, source, frames_in_unit) = match self.run_unit() {
            Err(TranscodeError::TimeOverflow) => {
                self.rebuild(self.plane())?;
                self.run_unit().map_err(|e| e.to_string())?
            }
            r => r.map_err(|e| e.to_string())?,
        };
        sort_by_time(&mut events);
        let plane = self.plane();
        self.local_unit += 1;
        self.unit += 1;
        let t_end = self.frames_done() * plane.dt_ref as u64;

        let mut released = self.framer.ingest_all(&events);
        released.extend(self.framer.finish(Some(t_end)));
        for e in &events {
            self.live.ingest(e);
        }
        let recon = released.last().map(|v| v.to_frame(&plane));

        let q = match (&source, &recon) {
            (Some(s), Some(r)) => quality(&s.data, &r.data, s.width as usize, s.height as usize, s.channels as usize).ok(),
            _ => None,
        };
        self.events.push(events.len() as u64);
        let ups = self.units_per_s();
        let event_bits = if plane.channels > 1 { 80.0 } else { 72.0 };
        let events_per_s = self.events.mean() * ups;
        let source_bps = match &source {
            Some(s) => s.data.len() as f64 * 8.0 * ups,
            // photon counts as 16-bit samples
            None => plane.pixel_count() as f64 * 16.0 * frames_in_unit as f64 * ups,
        };
        let tick = Tick {
            t: t_end,
            unit: self.unit,
            mse: q.map(|q| q.mse),
            psnr: q.map(|q| q.psnr),
            ssim: q.map(|q| q.ssim),
            source_bps,
            adder_bps: events_per_s * event_bits,
            events_per_s,
            unit_events: events.len() as u64,
            crf: self.crf,
            view: self.view,
        };

        let preview = match self.view {
            View::Intensity => recon.unwrap_or_else(|| self.live.intensity_frame()),
            View::D => self.live.d_image(),
            View::Dt => self.live.dt_image(),
        };
        let mut out = vec![Output::Tick(tick)];
        if let Ok(png) = crate::media::encode_png(&preview) {
            out.push(Output::Preview(png));
        }
        if self.features {
            if let Pipe::Video(v) = &self.pipe {
                out.push(Output::Features(Features { unit: self.unit, points: v.tc.last_features().to_vec() }));
            }
        }
        Ok(out)
    }

    /// Reference intervals processed since the last rebuild.
    fn frames_done(&self) -> u64 {
        match &self.pipe {
            Pipe::Video(_) => self.local_unit,
            Pipe::Sim(s) => self.local_unit * s.per_unit as u64,
        }
    }

    fn run_unit(&mut self) -> Result<(Vec<Event>, Option<Frame>, usize), TranscodeError> {
        match &mut self.pipe {
            Pipe::Video(v) => {
                let frame = v.frames[self.pos].clone();
                let events = v.tc.transcode_frame(&frame.data)?;
                self.pos = (self.pos + 1) % v.frames.len();
                Ok((events, Some(frame), 1))
            }
            Pipe::Sim(s) => {
                let mut events = Vec::new();
                for _ in 0..s.per_unit {
                    let f = &s.frames[self.pos];
                    events.extend(s.sim.ingest_frame(f).map_err(|e| match e {
                        eventforge_core::sim::SimError::TimeOverflow => TranscodeError::TimeOverflow,
                        _ => TranscodeError::FrameSize { expected: s.config.width as usize * s.config.height as usize, got: f.len() },
                    })?);
                    self.pos = (self.pos + 1) % s.frames.len();
                }
                Ok((events, None, s.per_unit))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use eventforge_core::sim::SimMode;
    use eventforge_core::synth;

    fn video_session(crf: u8) -> Session {
        let frames = synth::surveillance(32, 24, 40, 5);
        Session::new(SourceSpec::Video { frames, fps: 30.0 }, crf).unwrap()
    }

    fn ticks(out: &[Output]) -> Vec<&Tick> {
        out.iter()
            .filter_map(|o| match o {
                Output::Tick(t) => Some(t),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn each_step_emits_tick_and_preview() {
        let mut s = video_session(0);
        let out = s.step().unwrap();
        assert_eq!(ticks(&out).len(), 1);
        assert!(matches!(out[1], Output::Preview(ref png) if png.starts_with(b"\x89PNG")));
        assert_eq!(ticks(&out)[0].t, 255);
        assert_eq!(s.state().unit, 1);
    }

    #[test]
    fn crf_change_applies_next_unit() {
        let mut s = video_session(0);
        for _ in 0..5 {
            s.step().unwrap();
        }
        s.apply(&Control::SetCrf { crf: 9 }).unwrap();
        assert_eq!(s.state().m, crf_sensitivity(9).unwrap().m);
        let out = s.step().unwrap();
        assert_eq!(ticks(&out)[0].crf, Some(9));
    }

    #[test]
    fn higher_crf_emits_fewer_events() {
        let count = |crf| {
            let mut s = video_session(crf);
            (0..40).map(|_| ticks(&s.step().unwrap())[0].unit_events).sum::<u64>()
        };
        let (lo, hi) = (count(0), count(9));
        assert!(hi < lo, "{hi} vs {lo}");
    }

    #[test]
    fn pause_view_and_errors() {
        let mut s = video_session(3);
        s.apply(&Control::Pause { paused: None }).unwrap();
        assert!(s.step().unwrap().is_empty());
        s.apply(&Control::Pause { paused: Some(false) }).unwrap();
        s.apply(&Control::ToggleView { view: View::Dt }).unwrap();
        assert_eq!(ticks(&s.step().unwrap())[0].view, View::Dt);
        assert!(s.apply(&Control::SetCrf { crf: 10 }).is_err());
        assert!(s.apply(&Control::SetParams { dt_ref: None, dt_max: Some(10), m: None, m_max: None, m_v: None, feature_radius: None }).is_err());
        let warn = s.apply(&Control::SetParams { dt_ref: Some(100), dt_max: None, m: None, m_max: None, m_v: None, feature_radius: None }).unwrap();
        assert!(warn.is_some());
        assert_eq!(s.state().dt_ref, 100);
        assert!(s.apply(&Control::SeekAdu { index: 1000 }).is_err());
        s.apply(&Control::SeekAdu { index: 0 }).unwrap();
        assert_eq!(ticks(&s.step().unwrap())[0].t, 100);
    }

    #[test]
    fn thresholds_override_clears_crf() {
        let mut s = video_session(3);
        s.apply(&Control::SetParams { dt_ref: None, dt_max: None, m: Some(1), m_max: Some(1), m_v: None, feature_radius: None }).unwrap();
        assert_eq!(s.state().crf, None);
        assert_eq!((s.state().m, s.state().m_max), (1, 1));
    }

    #[test]
    fn features_toggle_reports_points() {
        let frames = synth::moving_squares(48, 48, 20, 3);
        let mut s = Session::new(SourceSpec::Video { frames, fps: 30.0 }, 6).unwrap();
        s.apply(&Control::ToggleFeatures { enabled: Some(true) }).unwrap();
        let mut points = 0;
        for _ in 0..10 {
            for o in s.step().unwrap() {
                if let Output::Features(f) = o {
                    points += f.points.len();
                }
            }
        }
        assert!(points > 0);
        s.apply(&Control::ToggleFeatures { enabled: None }).unwrap();
        assert!(!s.state().features);
    }

    #[test]
    fn simulator_source_runs_at_thirty_ticks_per_second() {
        let (frames, roi) = synth::photon_mover(24, 16, 30, 4, 2);
        let config = SimConfig::new(SimMode::SelfAdjust, 24, 16);
        let mut s = Session::new(SourceSpec::Simulator { config, frames, roi }, 0).unwrap();
        assert!((s.units_per_s() - 30.0).abs() < 1e-9);
        let out = s.step().unwrap();
        let t = ticks(&out)[0];
        assert_eq!(t.t, 8 * 50);
        assert!(t.psnr.is_none());
        assert!(s.apply(&Control::SetCrf { crf: 3 }).is_err());
    }
}
