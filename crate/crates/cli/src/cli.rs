//! Command-line definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "eventforge", version, about = "Intensity-event video codec tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert video, DVS events or an event stream into intensity events
    Transcode(TranscodeArgs),
    /// Print stream metadata
    Info(InfoArgs),
    /// Render events as frames or contrast events
    Export(ExportArgs),
    /// Asynchronous corner detection over an event stream
    Detect(DetectArgs),
    /// Event-rate motion segmentation masks
    Segment(SegmentArgs),
    /// Thin DVS events by feature boxes
    FilterDvs(FilterDvsArgs),
    /// Run the integrating sensor simulator on photon-count frames
    Simulate(SimulateArgs),
    /// Compress a raw event stream
    Compress(CompressArgs),
    /// Decompress to a raw event stream
    Decompress(DecompressArgs),
    /// Serve the live tuning endpoint
    Serve(ServeArgs),
    /// Write synthetic test inputs
    Synth(SynthArgs),
}

/// Geometry for raw inputs without a sidecar.
#[derive(Args, Debug, Clone, Copy, Default)]
pub struct GeometryArgs {
    #[arg(long)]
    pub width: Option<u16>,
    #[arg(long)]
    pub height: Option<u16>,
    #[arg(long)]
    pub channels: Option<u8>,
}

/// Contrast sensitivity: a CRF level, optionally overridden field by field.
#[derive(Args, Debug, Clone, Copy)]
pub struct SensitivityArgs {
    /// Quality level 0 (lossless) to 9
    #[arg(long, default_value_t = 3)]
    pub crf: u8,
    #[arg(long)]
    pub m: Option<u8>,
    #[arg(long)]
    pub m_max: Option<u8>,
    #[arg(long)]
    pub m_v: Option<u32>,
    #[arg(long)]
    pub feature_radius: Option<u16>,
}

#[derive(Args, Debug)]
pub struct TranscodeArgs {
    /// Video (.y4m, .png, PNG directory, raw dump), DVS (.dvs, .csv) or events (.adder, .adderc)
    pub input: PathBuf,
    /// Output `.adder`, or `.adderc` to compress
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub sens: SensitivityArgs,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Ticks per reference interval [default: 255 per frame for video, 2000 for DVS, the
    /// input's own for event streams]
    #[arg(long)]
    pub dt_ref: Option<u32>,
    /// Longest first-event span in ticks [default: 120 reference intervals for video]
    #[arg(long)]
    pub dt_max: Option<u32>,
    /// Source frame rate when the input does not carry one
    #[arg(long)]
    pub fps: Option<f64>,
    /// Keep every saturated threshold instead of only the highest
    #[arg(long)]
    pub list_mode: bool,
    /// Lower thresholds around detected corners
    #[arg(long)]
    pub features: bool,
    /// Print quality against the source (framed input)
    #[arg(long)]
    pub metrics: bool,
    /// Per-frame metrics CSV (implies --metrics)
    #[arg(long)]
    pub metrics_csv: Option<PathBuf>,
    /// DVS contrast threshold
    #[arg(long, default_value_t = 0.15)]
    pub theta: f64,
    /// DVS latent reset interval in microseconds; 0 disables
    #[arg(long, default_value_t = 500_000)]
    pub reset_interval: u32,
}

#[derive(Args, Debug)]
pub struct InfoArgs {
    pub input: PathBuf,
    /// Scan every event for rate and dynamic range
    #[arg(long)]
    pub deep: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportMode {
    /// Time-integrated intensity
    Accurate,
    /// Latest-event intensity
    Fast,
    /// Decimation exponents
    D,
    /// Event spans
    Dt,
    /// Contrast events
    Dvs,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    /// `.adder` or `.adderc` stream
    pub input: PathBuf,
    /// Frames: `.y4m`, `.raw` or a PNG directory. Contrast events: `.csv` or binary
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = ExportMode::Accurate)]
    pub mode: ExportMode,
    /// Output frame rate [default: one frame per reference interval]
    #[arg(long)]
    pub fps: Option<f64>,
    /// Frames held before forcing the oldest out (accurate mode)
    #[arg(long)]
    pub buffer_limit: Option<usize>,
    /// Contrast threshold for `--mode dvs`
    #[arg(long, default_value_t = 0.15)]
    pub theta: f64,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    pub input: PathBuf,
    /// Feature CSV `x,y,t`
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub threshold: u8,
    /// Contiguous arc length
    #[arg(long, default_value_t = 9)]
    pub arc: u8,
    /// Also cluster features per window and write boxes CSV `t0,t1,x0,y0,x1,y1`
    #[arg(long)]
    pub boxes: Option<PathBuf>,
    #[arg(long, default_value_t = 5.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 5)]
    pub min_pts: usize,
    /// Clustering windows per second of stream time
    #[arg(long, default_value_t = 30.0)]
    pub window_hz: f64,
}

#[derive(Args, Debug)]
pub struct SegmentArgs {
    pub input: PathBuf,
    /// Directory for mask PNGs
    #[arg(short, long)]
    pub output: PathBuf,
    /// Window in ticks [default: the reference interval]
    #[arg(long)]
    pub window: Option<u32>,
    /// A pixel is moving when it fires more than this many events in a window
    #[arg(long, default_value_t = 2)]
    pub threshold: u32,
    /// Closing kernel half-size
    #[arg(long, default_value_t = 1)]
    pub close: u16,
}

#[derive(Args, Debug)]
pub struct FilterDvsArgs {
    /// DVS binary or CSV
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Boxes CSV from `detect --boxes`
    #[arg(long)]
    pub boxes: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub keep_inside: f64,
    #[arg(long, default_value_t = 0.0)]
    pub keep_outside: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimModeArg {
    Constant,
    SelfAdjust,
    Radial,
    Aggressive,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Photon frames: 16-bit raw dump with sidecar, or 8-bit video
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = SimModeArg::SelfAdjust)]
    pub mode: SimModeArg,
    #[arg(long, default_value_t = 2500)]
    pub dt_max: u32,
    #[arg(long, default_value_t = 50)]
    pub dt_ref: u32,
    #[arg(long, default_value_t = 12_000)]
    pub dt_s: u32,
    #[arg(long, default_value_t = 8)]
    pub initial_d: u8,
    /// CSV `sample_index,x,y,w,h` (aggressive mode)
    #[arg(long)]
    pub roi_track: Option<PathBuf>,
    /// Write run counters as JSON
    #[arg(long)]
    pub stats: Option<PathBuf>,
    #[command(flatten)]
    pub geometry: GeometryArgs,
}

#[derive(Args, Debug)]
pub struct CompressArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Time-quantization tolerance from this CRF level
    #[arg(long, default_value_t = 0)]
    pub crf: u8,
    /// Explicit tolerance, overriding --crf
    #[arg(long)]
    pub m_max: Option<u8>,
    /// ADU window in ticks [default: the stream's dt_max]
    #[arg(long)]
    pub adu_span: Option<u32>,
}

#[derive(Args, Debug)]
pub struct DecompressArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Start at this ADU
    #[arg(long, default_value_t = 0)]
    pub from_adu: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Squares,
    Noise,
    Surveillance,
    Dvs,
    Photons,
    Mover,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(value_enum)]
    pub kind: SynthKind,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub width: u16,
    #[arg(long, default_value_t = 64)]
    pub height: u16,
    /// Frames, or milliseconds of DVS events
    #[arg(long, default_value_t = 120)]
    pub frames: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
}

#[derive(Args, Debug, Clone)]
pub struct ServeArgs {
    #[arg(long, env = "EVENTFORGE_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    /// Framed video to loop; without it a synthetic clip is used
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Drive the session from the sensor simulator instead of a video
    #[arg(long)]
    pub simulate: bool,
    /// Built UI bundle served at `/`
    #[arg(long, default_value = "ui/dist")]
    pub ui_dir: PathBuf,
    /// Input units processed per second of wall time
    #[arg(long, default_value_t = 30.0)]
    pub rate: f64,
    #[arg(long, default_value_t = 3)]
    pub crf: u8,
    #[command(flatten)]
    pub geometry: GeometryArgs,
}
