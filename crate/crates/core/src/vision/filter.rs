//! Seeded DVS event thinning by region.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dbscan::BBox;
use crate::dvs::DvsEvent;

/// Keeps each event with probability `keep_inside` when it lies in any box, otherwise
/// `keep_outside`. The same seed always selects the same events.
pub fn filter_dvs_by_boxes(
    events: &[DvsEvent],
    boxes: &[BBox],
    keep_inside: f64,
    keep_outside: f64,
    seed: u64,
) -> Vec<DvsEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    events
        .iter()
        .filter(|e| {
            let keep = if boxes.iter().any(|b| b.contains(e.x, e.y)) { keep_inside } else { keep_outside };
            rng.random::<f64>() < keep
        })
        .copied()
        .collect()
}
