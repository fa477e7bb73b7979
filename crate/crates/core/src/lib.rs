//! Intensity-event video codec.
//!
//! Framed video, DVS contrast events and simulated sensor output are transcoded into a
//! single asynchronous event representation, compressed with a context-adaptive
//! arithmetic coder, and reconstructed or exported for downstream applications.

pub mod audit;
pub mod codec;
pub mod crf;
pub mod dvs;
pub mod event;
pub mod frame;
pub mod metrics;
pub mod pixel;
pub mod reconstruct;
pub mod sim;
pub mod stream;
pub mod synth;
pub mod transcode;
pub mod vision;

pub use event::{Event, PixelMode, PlaneParams, SensitivityParams, SourceKind, D_FILLER, D_MAX, D_ZERO};
pub use pixel::PixelState;
