//! Sources that drive pixel integration: framed video, DVS streams and existing event
//! streams.

pub mod dvs;
pub mod framed;
pub mod reencode;

use thiserror::Error;

use crate::event::ParamError;
use crate::stream::StreamError;

pub use dvs::{DvsParams, DvsTranscoder};
pub use framed::FramedTranscoder;
pub use reencode::reencode;

/// Errors raised while transcoding.
#[derive(Error, Debug)]
pub enum TranscodeError {
    /// Plane or sensitivity parameters rejected
    #[error(transparent)]
    Params(#[from] ParamError),

    /// Frame byte count does not match the plane
    #[error("frame has {got} bytes, expected {expected}")]
    FrameSize { expected: usize, got: usize },

    /// The next frame would push timestamps past 32 bits
    #[error("timestamp range exhausted; split the input")]
    TimeOverflow,

    /// DVS event arrived later than the reorder window allows
    #[error("DVS event at t={t} arrived after t={latest}, beyond the {window}-tick reorder window")]
    OutOfOrder { t: u32, latest: u32, window: u32 },

    /// Input event stream failed to decode
    #[error(transparent)]
    Stream(#[from] StreamError),

    /// Input event stream geometry differs from the target plane
    #[error("input plane {0} does not match the target plane {1}")]
    PlaneMismatch(String, String),
}
