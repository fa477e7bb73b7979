//! Decoder-side checks of stream contracts.

use std::collections::HashMap;

use crate::event::{Event, D_FILLER, D_ZERO};

/// A level whose first event spans more than Δt_max.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DtMaxViolation {
    pub event: Event,
    pub level_start: u32,
    pub span: u32,
}

/// Checks that the first event of every intensity level spans at most `dt_max` ticks.
/// A pixel's level starts at time zero and after each filler or zero event. Events must
/// be time ordered per pixel and channel.
pub fn audit_dtmax(events: &[Event], dt_max: u32) -> Vec<DtMaxViolation> {
    // (last_t, awaiting first event of a level)
    let mut state: HashMap<(u16, u16, u8), (u32, bool)> = HashMap::new();
    let mut bad = Vec::new();
    for &e in events {
        let (last, awaiting) = state.entry((e.x, e.y, e.c)).or_insert((0, true));
        let span = e.t.saturating_sub(*last);
        if *awaiting && e.d != D_FILLER && span > dt_max {
            bad.push(DtMaxViolation { event: e, level_start: *last, span });
        }
        *awaiting = matches!(e.d, D_FILLER | D_ZERO);
        *last = e.t;
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_long_first_events() {
        let ev = [
            Event::new(0, 0, 0, 8, 256),
            Event::new(0, 0, 0, 9, 768),
            Event::new(0, 0, 0, D_FILLER, 768),
            Event::new(0, 0, 0, 5, 1200),
            Event::new(1, 0, 0, D_ZERO, 300),
            Event::new(1, 0, 0, D_ZERO, 600),
        ];
        let v = audit_dtmax(&ev, 300);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].event.t, 1200);
        assert_eq!(v[0].span, 432);
        assert!(audit_dtmax(&ev[..3], 300).is_empty());
    }
}
