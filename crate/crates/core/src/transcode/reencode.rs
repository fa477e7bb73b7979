//! Feeding an existing event stream back through pixel integration under new parameters.

use super::TranscodeError;
use crate::event::{Event, PixelMode, PlaneParams, SensitivityParams, D_FILLER, D_MAX, D_ZERO};
use crate::pixel::PixelState;
use crate::stream::StreamHeader;

#[derive(Clone, Debug)]
struct Slot {
    state: PixelState,
    last_t: u32,
    rate: f64,
}

/// Re-integrates `events` (per-pixel time ordered) under `plane`, `sens` and `mode`.
/// Each event contributes its implied intensity over its span; fillers repeat the
/// previous rate and zero events contribute darkness.
pub fn reencode(
    input: &StreamHeader,
    events: &[Event],
    plane: PlaneParams,
    sens: SensitivityParams,
    mode: PixelMode,
) -> Result<Vec<Event>, TranscodeError> {
    plane.validate()?;
    sens.validate()?;
    let src = input.plane;
    if (src.width, src.height, src.channels) != (plane.width, plane.height, plane.channels) {
        let fmt = |p: &PlaneParams| format!("{}x{}x{}", p.width, p.height, p.channels);
        return Err(TranscodeError::PlaneMismatch(fmt(&src), fmt(&plane)));
    }
    let ch = plane.channels as usize;
    let mut slots: Vec<Option<Slot>> = vec![None; plane.pixel_count() * ch];
    let mut out = Vec::new();
    for e in events {
        if !plane.contains(e.x, e.y, e.c) {
            continue;
        }
        let i = (e.y as usize * plane.width as usize + e.x as usize) * ch + e.c as usize;
        let slot = slots[i].get_or_insert_with(|| {
            let mut state = PixelState::new(e.x, e.y, e.c, mode, plane.dt_ref);
            state.set_threshold(sens.m as u16);
            Slot { state, last_t: 0, rate: 0.0 }
        });
        let span = e.t.saturating_sub(slot.last_t) as u64;
        if span == 0 {
            continue;
        }
        let amount = match e.d {
            D_ZERO => 0.0,
            D_FILLER => slot.rate * span as f64,
            d if d <= D_MAX => 2f64.powi(d as i32),
            _ => continue,
        };
        slot.rate = amount / span as f64;
        slot.last_t = e.t;
        slot.state.process(amount, span, plane.dt_max, &sens, &mut out);
    }
    for slot in slots.iter_mut().flatten() {
        slot.state.end_level(&mut out);
    }
    Ok(out)
}
