//! Subcommand implementations.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use eventforge_core::codec::container::{adu_index, MAGIC as ADRC_MAGIC};
use eventforge_core::codec::{compress_events, decompress_from, CompressParams};
use eventforge_core::crf::{crf_row, crf_sensitivity};
use eventforge_core::dvs::{read_dvs_binary, read_dvs_csv, write_dvs_binary, write_dvs_csv, DvsEvent};
use eventforge_core::event::sort_by_time;
use eventforge_core::frame::Frame;
use eventforge_core::reconstruct::{export_dvs, instantaneous_value, reconstruct_accurate, ExportDvsParams, LiveView};
use eventforge_core::sim::{read_roi_track, SimConfig, SimMode, Simulator};
use eventforge_core::stream::{read_all, stream_info, write_stream, StreamHeader, StreamWriter, MAGIC as ADDR_MAGIC};
use eventforge_core::transcode::{reencode, DvsParams, DvsTranscoder, FramedTranscoder};
use eventforge_core::vision::{cluster_features, filter_dvs_by_boxes, segment_motion, AsyncDetector, BBox, FastParams, FeaturePoint, SegmentParams};
use eventforge_core::{synth, Event, PixelMode, PlaneParams, SensitivityParams, SourceKind, D_FILLER};
use serde::{Deserialize, Serialize};

use crate::cli::*;
use crate::error::{CliError, Result};
use crate::media::{self, read_file, write_file, RawOverrides, Video};
use crate::report::MetricsReport;

/// Reference intervals per Δt_max when none is given.
pub const DEFAULT_DT_MAX_REFS: u32 = 120;
const DEFAULT_FPS: f64 = 30.0;
const I_MAX: f64 = 255.0;

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Transcode(a) => transcode(a, out),
        Command::Info(a) => info(a, out),
        Command::Export(a) => export(a, out),
        Command::Detect(a) => detect(a, out),
        Command::Segment(a) => segment(a, out),
        Command::FilterDvs(a) => filter_dvs(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::Compress(a) => compress(a, out),
        Command::Decompress(a) => decompress(a, out),
        Command::Synth(a) => synth_cmd(a, out),
        Command::Serve(a) => crate::service::serve_blocking(a),
    }
}

fn say(out: &mut dyn Write, text: std::fmt::Arguments) {
    // a closed stdout must not fail the command
    let _ = writeln!(out, "{text}");
}

impl From<GeometryArgs> for RawOverrides {
    fn from(g: GeometryArgs) -> Self {
        Self { width: g.width, height: g.height, channels: g.channels, fps: None }
    }
}

impl SensitivityArgs {
    pub fn resolve(&self) -> Result<SensitivityParams> {
        let base = crf_sensitivity(self.crf)?;
        let s = SensitivityParams {
            m: self.m.unwrap_or(base.m),
            m_max: self.m_max.unwrap_or(base.m_max.max(self.m.unwrap_or(0))),
            m_v: self.m_v.unwrap_or(base.m_v),
            feature_radius: self.feature_radius.unwrap_or(base.feature_radius),
        };
        s.validate()?;
        Ok(s)
    }
}

/// Reads `.adder` or `.adderc` bytes, chosen by magic.
pub fn load_events(path: &Path) -> Result<(StreamHeader, Vec<Event>)> {
    let bytes = read_file(path)?;
    if bytes.starts_with(&ADRC_MAGIC) {
        let d = decompress_from(&bytes, 0)?;
        if d.truncated {
            log::warn!("{}: trailing partial ADU ignored", path.display());
        }
        Ok((d.header, d.events))
    } else if bytes.starts_with(&ADDR_MAGIC) {
        Ok(read_all(&bytes)?)
    } else {
        Err(CliError::format(format!("{}: not an event stream", path.display())))
    }
}

/// Writes events raw, or compressed when the path ends in `.adderc`.
pub fn save_events(path: &Path, header: &StreamHeader, events: &[Event], m_max: u8) -> Result<usize> {
    let bytes = if is_ext(path, "adderc") {
        compress_events(header, events, CompressParams { adu_span: None, m_max })
    } else {
        let mut w = StreamWriter::new(Vec::new(), *header)?;
        w.write_events(events)?;
        w.finish()?
    };
    write_file(path, &bytes)?;
    Ok(bytes.len())
}

fn is_ext(path: &Path, ext: &str) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

fn read_dvs(path: &Path) -> Result<Vec<DvsEvent>> {
    let bytes = read_file(path)?;
    if is_ext(path, "csv") {
        let text = String::from_utf8(bytes).map_err(|_| CliError::format("DVS CSV is not UTF-8"))?;
        Ok(read_dvs_csv(&text)?)
    } else {
        Ok(read_dvs_binary(&bytes)?)
    }
}

fn write_dvs(path: &Path, events: &[DvsEvent]) -> Result<()> {
    if is_ext(path, "csv") {
        write_file(path, write_dvs_csv(events)?.as_bytes())
    } else {
        write_file(path, &write_dvs_binary(events))
    }
}

/// Ticks per second for a framed source: Δt_ref per frame at the given rate.
pub fn framed_plane(video: &Video, dt_ref: u32, dt_max: Option<u32>, fps: f64) -> Result<PlaneParams> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(CliError::param(format!("invalid frame rate {fps}")));
    }
    let dt_s = (dt_ref as f64 * fps).round();
    if dt_s > u32::MAX as f64 || dt_s < 1.0 {
        return Err(CliError::param("dt_ref times fps does not fit 32-bit ticks"));
    }
    // Δt_s must be a whole multiple of Δt_ref; fractional rates round to the nearest frame
    let dt_s = ((dt_s / dt_ref as f64).round().max(1.0) as u32) * dt_ref;
    let plane = PlaneParams {
        width: video.width,
        height: video.height,
        channels: video.channels,
        dt_s,
        dt_ref,
        dt_max: dt_max.unwrap_or(dt_ref.saturating_mul(DEFAULT_DT_MAX_REFS)),
        source_kind: SourceKind::Framed,
    };
    plane.validate()?;
    Ok(plane)
}

fn transcode(a: TranscodeArgs, out: &mut dyn Write) -> Result<()> {
    let sens = a.sens.resolve()?;
    let mode = if a.list_mode { PixelMode::List } else { PixelMode::Collapse };
    let head = read_file(&a.input).map(|b| b.get(..4).map(<[u8]>::to_vec).unwrap_or_default())?;
    let is_events = head == ADDR_MAGIC || head == ADRC_MAGIC;
    let is_dvs = is_ext(&a.input, "dvs") || is_ext(&a.input, "csv");

    let (header, events, report) = if is_events {
        let (src, events) = load_events(&a.input)?;
        let mut plane = src.plane;
        plane.dt_ref = a.dt_ref.unwrap_or(src.plane.dt_ref);
        plane.dt_max = a.dt_max.unwrap_or(src.plane.dt_max);
        plane.dt_s = src.plane.dt_s.div_ceil(plane.dt_ref) * plane.dt_ref;
        let events = reencode(&src, &events, plane, sens, mode)?;
        (StreamHeader::new(plane, mode), events, None)
    } else if is_dvs {
        let dvs = read_dvs(&a.input)?;
        let width = a.geometry.width.unwrap_or_else(|| dvs.iter().map(|e| e.x + 1).max().unwrap_or(1));
        let height = a.geometry.height.unwrap_or_else(|| dvs.iter().map(|e| e.y + 1).max().unwrap_or(1));
        let mut params = DvsParams::new(width, height);
        params.theta = a.theta;
        params.reset_interval = a.reset_interval;
        params.dt_ref = a.dt_ref.unwrap_or(params.dt_ref);
        params.dt_max = a.dt_max.unwrap_or(params.dt_max.max(params.dt_ref));
        let mut tc = DvsTranscoder::new(params, sens, mode)?;
        let mut events = tc.push_all(&dvs)?;
        events.extend(tc.finish(None));
        if tc.dropped() > 0 {
            log::warn!("{} DVS events outside {width}x{height} dropped", tc.dropped());
        }
        sort_by_time(&mut events);
        (StreamHeader::new(params.plane(), mode), events, None)
    } else {
        let video = media::read_video(&a.input, a.geometry.into())?;
        let fps = a.fps.or(video.fps).unwrap_or(DEFAULT_FPS);
        let plane = framed_plane(&video, a.dt_ref.unwrap_or(255), a.dt_max, fps)?;
        if let Some(w) = plane.dt_ref_warning(I_MAX as u32) {
            log::warn!("{w}");
            let _ = writeln!(std::io::stderr(), "warning: {w}");
        }
        let mut tc = FramedTranscoder::new(plane, sens, mode)?;
        if a.features {
            tc = tc.with_feature_feedback(FastParams::default());
        }
        let mut events = Vec::new();
        for f in &video.frames {
            events.extend(tc.transcode_frame(&f.data)?);
        }
        events.extend(tc.finish());
        sort_by_time(&mut events);
        (StreamHeader::new(plane, mode), events, Some((video, fps)))
    };

    let bytes = save_events(&a.output, &header, &events, sens.m_max)?;
    say(out, format_args!("events:       {}", events.len()));
    say(out, format_args!("output bytes: {bytes}"));

    if let (true, Some((video, fps))) = (a.metrics || a.metrics_csv.is_some(), report) {
        // measure what was actually written, including lossy compression
        let (_, written) = load_events(&a.output)?;
        let report = metrics_for(&header.plane, &video, &written, header.event_size(), fps)?;
        let source_bytes = video.frames.len() * video.frame_bytes();
        say(out, format_args!("source bytes: {source_bytes}"));
        say(out, format_args!("mean MSE:     {:.4}", report.mean_mse()));
        say(out, format_args!("mean PSNR:    {:.2} dB", report.mean_psnr()));
        say(out, format_args!("mean SSIM:    {:.4}", report.mean_ssim()));
        if let Some(p) = &a.metrics_csv {
            write_file(p, report.to_csv()?.as_bytes())?;
        }
    }
    Ok(())
}

/// Accurate reconstruction of every source frame, compared with the source.
pub fn metrics_for(plane: &PlaneParams, video: &Video, events: &[Event], event_size: usize, fps: f64) -> Result<MetricsReport> {
    let n = video.frames.len();
    let end = n as u64 * plane.dt_ref as u64;
    let recon: Vec<Frame> = reconstruct_accurate(plane, events, plane.dt_ref, None, Some(end))
        .iter()
        .take(n)
        .map(|v| v.to_frame(plane))
        .collect();
    let mut per_frame = vec![0u64; n];
    for e in events.iter().filter(|e| e.d != D_FILLER && e.t > 0) {
        let k = ((e.t as u64 - 1) / plane.dt_ref as u64) as usize;
        if let Some(c) = per_frame.get_mut(k) {
            *c += 1;
        }
    }
    MetricsReport::build(&video.frames, &recon, &per_frame, event_size, fps)
}

fn info(a: InfoArgs, out: &mut dyn Write) -> Result<()> {
    let bytes = read_file(&a.input)?;
    if bytes.starts_with(&ADRC_MAGIC) {
        let (header, span, records, truncated) = adu_index(&bytes)?;
        let events: u64 = records.iter().map(|r| r.event_count as u64).sum();
        say(out, format_args!("container:      compressed"));
        say(out, format_args!("compressed:     {} bytes", bytes.len()));
        say(out, format_args!("ADUs:           {} of {span} ticks", records.len()));
        if truncated {
            say(out, format_args!("warning:        trailing partial ADU"));
        }
        let raw = if a.deep {
            let d = decompress_from(&bytes, 0)?;
            write_stream(&d.header, &d.events)
        } else {
            header.to_bytes().to_vec()
        };
        let mut info = stream_info(&raw, a.deep)?;
        info.event_count = events;
        let raw_size = eventforge_core::stream::HEADER_LEN as u64 + events * header.event_size() as u64;
        say(out, format_args!("raw equivalent: {raw_size} bytes"));
        let _ = write!(out, "{info}");
    } else {
        let info = stream_info(&bytes, a.deep)?;
        let _ = write!(out, "{info}");
    }
    Ok(())
}

fn export(a: ExportArgs, out: &mut dyn Write) -> Result<()> {
    let (header, events) = load_events(&a.input)?;
    let plane = header.plane;
    if a.mode == ExportMode::Dvs {
        let dvs = export_dvs(&plane, &events, ExportDvsParams { theta: a.theta, ..Default::default() });
        write_dvs(&a.output, &dvs)?;
        say(out, format_args!("contrast events: {}", dvs.len()));
        return Ok(());
    }
    let dt_frame = match a.fps {
        Some(fps) if fps > 0.0 && fps.is_finite() => ((plane.dt_s as f64 / fps).round() as u32).max(1),
        Some(fps) => return Err(CliError::param(format!("invalid frame rate {fps}"))),
        None => plane.dt_ref,
    };
    let fps = plane.dt_s as f64 / dt_frame as f64;
    let end = events.iter().map(|e| e.t as u64).max().map(|t| t.div_ceil(dt_frame as u64) * dt_frame as u64);
    let frames: Vec<Frame> = match a.mode {
        ExportMode::Accurate => reconstruct_accurate(&plane, &events, dt_frame, a.buffer_limit, end)
            .iter()
            .map(|v| v.to_frame(&plane))
            .collect(),
        mode => live_frames(&plane, &events, dt_frame, end.unwrap_or(0), mode),
    };
    media::write_video(&a.output, &frames, fps)?;
    say(out, format_args!("frames: {}", frames.len()));
    Ok(())
}

/// Latest-event views sampled at every frame boundary. A frame never includes events
/// stamped at or after its end.
pub fn live_frames(plane: &PlaneParams, events: &[Event], dt_frame: u32, end: u64, mode: ExportMode) -> Vec<Frame> {
    let mut view = LiveView::new(*plane, I_MAX, dt_frame);
    let mut frames = Vec::new();
    let mut next = dt_frame as u64;
    let snap = |v: &LiveView| match mode {
        ExportMode::D => v.d_image(),
        ExportMode::Dt => v.dt_image(),
        _ => v.intensity_frame(),
    };
    for e in events {
        while e.t as u64 >= next {
            frames.push(snap(&view));
            next += dt_frame as u64;
        }
        view.ingest(e);
    }
    while next <= end {
        frames.push(snap(&view));
        next += dt_frame as u64;
    }
    frames
}

/// Feature boxes valid over `[t0, t1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxRow {
    pub t0: u64,
    pub t1: u64,
    pub x0: u16,
    pub y0: u16,
    pub x1: u16,
    pub y1: u16,
}

/// Runs the asynchronous detector over channel 0. Each event sets its pixel to the
/// instantaneous intensity and tests that pixel.
pub fn detect_features(plane: &PlaneParams, events: &[Event], params: FastParams) -> (Vec<FeaturePoint>, u64) {
    let (w, h) = (plane.width as usize, plane.height as usize);
    let mut det = AsyncDetector::new(w, h, params);
    let mut last_t = vec![0u32; w * h];
    let mut found = Vec::new();
    for e in events.iter().filter(|e| e.c == 0 && plane.contains(e.x, e.y, 0)) {
        let i = e.y as usize * w + e.x as usize;
        let dt = e.t.saturating_sub(last_t[i]);
        last_t[i] = e.t;
        if let Some(v) = instantaneous_value(e.d, dt, I_MAX, plane.dt_ref) {
            found.extend(det.on_event(e.x, e.y, e.t, v));
        }
    }
    (found, det.tests)
}

/// DBSCAN boxes per window of `window` ticks.
pub fn cluster_windows(features: &[FeaturePoint], window: u64, eps: f64, min_pts: usize) -> Vec<BoxRow> {
    let mut by_window: HashMap<u64, Vec<(u16, u16)>> = HashMap::new();
    for f in features {
        by_window.entry(f.t as u64 / window).or_default().push((f.x, f.y));
    }
    let mut keys: Vec<u64> = by_window.keys().copied().collect();
    keys.sort_unstable();
    let mut rows = Vec::new();
    for k in keys {
        let mut pts = by_window.remove(&k).unwrap();
        pts.sort_unstable();
        pts.dedup();
        for b in cluster_features(&pts, eps, min_pts) {
            rows.push(BoxRow { t0: k * window, t1: (k + 1) * window, x0: b.x0, y0: b.y0, x1: b.x1, y1: b.y1 });
        }
    }
    rows
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::format(e.to_string()))
}

fn detect(a: DetectArgs, out: &mut dyn Write) -> Result<()> {
    if !(1..=16).contains(&a.arc) {
        return Err(CliError::param("--arc must be in 1..=16"));
    }
    let (header, events) = load_events(&a.input)?;
    let (features, tests) = detect_features(&header.plane, &events, FastParams { threshold: a.threshold, n: a.arc });
    write_file(&a.output, &to_csv(&features)?)?;
    say(out, format_args!("features: {} ({tests} pixel tests)", features.len()));
    if let Some(p) = &a.boxes {
        if !(a.window_hz > 0.0) || !(a.eps > 0.0) {
            return Err(CliError::param("--window-hz and --eps must be positive"));
        }
        let window = ((header.plane.dt_s as f64 / a.window_hz).round() as u64).max(1);
        let rows = cluster_windows(&features, window, a.eps, a.min_pts);
        write_file(p, &to_csv(&rows)?)?;
        say(out, format_args!("boxes: {}", rows.len()));
    }
    Ok(())
}

fn segment(a: SegmentArgs, out: &mut dyn Write) -> Result<()> {
    let (header, events) = load_events(&a.input)?;
    let p = header.plane;
    let params = SegmentParams { window: a.window.unwrap_or(p.dt_ref), fire_threshold: Some(a.threshold), close_radius: a.close };
    let masks = segment_motion(&events, p.width, p.height, params);
    let frames: Vec<Frame> = masks.iter().map(|m| Frame::from_data(m.width, m.height, 1, m.to_gray()).unwrap()).collect();
    media::write_png_dir(&a.output, &frames, "mask")?;
    say(out, format_args!("masks: {}", masks.len()));
    Ok(())
}

fn filter_dvs(a: FilterDvsArgs, out: &mut dyn Write) -> Result<()> {
    for (name, v) in [("--keep-inside", a.keep_inside), ("--keep-outside", a.keep_outside)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(CliError::param(format!("{name} must be in [0, 1]")));
        }
    }
    let events = read_dvs(&a.input)?;
    let text = String::from_utf8(read_file(&a.boxes)?).map_err(|_| CliError::format("boxes CSV is not UTF-8"))?;
    let rows: Vec<BoxRow> = csv::Reader::from_reader(text.as_bytes()).deserialize().collect::<std::result::Result<_, _>>()?;
    let kept = filter_by_windows(&events, &rows, a.keep_inside, a.keep_outside, a.seed);
    write_dvs(&a.output, &kept)?;
    say(out, format_args!("kept {} of {} events", kept.len(), events.len()));
    Ok(())
}

/// Applies each event's window boxes. Events are grouped by the set of rows covering
/// their timestamp; each group draws from its own seed derived from `seed`.
pub fn filter_by_windows(events: &[DvsEvent], rows: &[BoxRow], keep_inside: f64, keep_outside: f64, seed: u64) -> Vec<DvsEvent> {
    let mut out = Vec::with_capacity(events.len());
    let mut start = 0;
    let mut sorted = events.to_vec();
    sorted.sort_by_key(|e| e.t);
    let covering = |t: u64| -> Vec<BBox> {
        rows.iter()
            .filter(|r| r.t0 <= t && t < r.t1)
            .map(|r| BBox { x0: r.x0, y0: r.y0, x1: r.x1, y1: r.y1 })
            .collect()
    };
    let mut group = 0u64;
    while start < sorted.len() {
        let boxes = covering(sorted[start].t as u64);
        let mut end = start + 1;
        while end < sorted.len() && covering(sorted[end].t as u64) == boxes {
            end += 1;
        }
        out.extend(filter_dvs_by_boxes(&sorted[start..end], &boxes, keep_inside, keep_outside, seed.wrapping_add(group)));
        group += 1;
        start = end;
    }
    out
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let (width, height, frames) = media::read_photons(&a.input, a.geometry.into())?;
    let mode = match a.mode {
        SimModeArg::Constant => SimMode::Constant,
        SimModeArg::SelfAdjust => SimMode::SelfAdjust,
        SimModeArg::Radial => SimMode::Radial,
        SimModeArg::Aggressive => SimMode::Aggressive,
    };
    let mut config = SimConfig::new(mode, width, height);
    config.dt_max = a.dt_max;
    config.dt_ref = a.dt_ref;
    config.dt_s = a.dt_s;
    config.initial_d = a.initial_d;
    config.plane().validate()?;
    let mut sim = Simulator::new(config);
    if let Some(p) = &a.roi_track {
        let text = String::from_utf8(read_file(p)?).map_err(|_| CliError::format("ROI track is not UTF-8"))?;
        sim = sim.with_roi_track(read_roi_track(&text)?);
    } else if mode == SimMode::Aggressive {
        log::warn!("aggressive mode without an ROI track treats the whole plane as outside");
    }
    let mut events = sim.run(&frames)?;
    sort_by_time(&mut events);
    let header = StreamHeader::new(config.plane(), PixelMode::Collapse);
    let bytes = save_events(&a.output, &header, &events, 0)?;
    if let Some(p) = &a.stats {
        write_file(p, serde_json::to_string_pretty(&sim.stats)?.as_bytes())?;
    }
    say(out, format_args!("events: {} ({} empty), {bytes} bytes", sim.stats.events, sim.stats.empty_events));
    Ok(())
}

fn compress(a: CompressArgs, out: &mut dyn Write) -> Result<()> {
    let (header, events) = load_events(&a.input)?;
    let m_max = match a.m_max {
        Some(m) => m,
        None => crf_row(a.crf)?.m_max,
    };
    if a.adu_span == Some(0) {
        return Err(CliError::param("--adu-span must be positive"));
    }
    let bytes = compress_events(&header, &events, CompressParams { adu_span: a.adu_span, m_max });
    write_file(&a.output, &bytes)?;
    let raw = eventforge_core::stream::HEADER_LEN + events.len() * header.event_size();
    say(out, format_args!("{} events, {raw} -> {} bytes (ratio {:.3})", events.len(), bytes.len(), bytes.len() as f64 / raw as f64));
    Ok(())
}

fn decompress(a: DecompressArgs, out: &mut dyn Write) -> Result<()> {
    let bytes = read_file(&a.input)?;
    let d = decompress_from(&bytes, a.from_adu)?;
    if d.truncated {
        log::warn!("{}: trailing partial ADU ignored", a.input.display());
    }
    write_file(&a.output, &write_stream(&d.header, &d.events))?;
    say(out, format_args!("events: {}", d.events.len()));
    Ok(())
}

fn synth_cmd(a: SynthArgs, out: &mut dyn Write) -> Result<()> {
    let (w, h, n, seed) = (a.width, a.height, a.frames, a.seed);
    if w == 0 || h == 0 {
        return Err(CliError::param("width and height must be positive"));
    }
    match a.kind {
        SynthKind::Squares | SynthKind::Noise | SynthKind::Surveillance => {
            let frames = match a.kind {
                SynthKind::Squares => synth::moving_squares(w, h, n, seed),
                SynthKind::Noise => synth::static_noise(w, h, n, 6, seed),
                _ => synth::surveillance(w, h, n, seed),
            };
            media::write_video(&a.output, &frames, a.fps)?;
        }
        SynthKind::Dvs => {
            let events = synth::dvs_stream(w, h, n as u32 * 1000, 3000, 0.15, 500_000, seed);
            write_dvs(&a.output, &events)?;
        }
        SynthKind::Photons => {
            let frames = synth::photon_multiples(w, h, n, 6, 8, seed);
            media::write_photons(&a.output, w, h, &frames)?;
        }
        SynthKind::Mover => {
            let (frames, roi) = synth::photon_mover(w, h, n, (w.min(h) / 6).max(2), seed);
            media::write_photons(&a.output, w, h, &frames)?;
            let mut csv = csv::Writer::from_writer(Vec::new());
            for r in &roi {
                csv.serialize(r)?;
            }
            let mut roi_path = a.output.as_os_str().to_owned();
            roi_path.push(".roi.csv");
            write_file(Path::new(&roi_path), &csv.into_inner().map_err(|e| CliError::format(e.to_string()))?)?;
        }
    }
    say(out, format_args!("wrote {}", a.output.display()));
    Ok(())
}
