//! Second-stage compression of event streams.

pub mod adu;
pub mod arith;
pub mod cabac;
pub mod container;
pub mod exact;

pub use container::{compress_events, compress_stream, decompress, decompress_from, decompress_stream, CodecError, CompressParams};
