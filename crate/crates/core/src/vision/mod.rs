//! Event-native vision: asynchronous corners, feature clustering, event thinning and
//! motion segmentation.

pub mod dbscan;
pub mod fast;
pub mod filter;
pub mod segment;

pub use dbscan::{cluster_features, dbscan, BBox};
pub use fast::{fast_dense, fast_test_pixel, AsyncDetector, FastParams, FeaturePoint};
pub use filter::filter_dvs_by_boxes;
pub use segment::{segment_motion, Mask, SegmentParams};
