use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Decimation exponent. Values above [`D_MAX`] are reserved symbols.
pub type D = u8;

/// Largest decimation exponent that carries intensity.
pub const D_MAX: D = 127;

/// Reserved exponent for a span with zero accumulated intensity.
pub const D_ZERO: D = 254;

/// Reserved exponent for a filler event that repeats the previous event's intensity
/// and closes a pixel's integration level.
pub const D_FILLER: D = 255;

/// Absolute timestamp in ticks.
pub type Tick = u32;

/// One intensity event. `t` is absolute; the span is measured from the previous event
/// of the same pixel and channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub x: u16,
    pub y: u16,
    /// Color channel, 0 for monochrome streams.
    pub c: u8,
    pub d: D,
    pub t: Tick,
}

impl Event {
    pub fn new(x: u16, y: u16, c: u8, d: D, t: Tick) -> Self {
        Self { x, y, c, d, t }
    }

    pub fn is_reserved(&self) -> bool {
        self.d > D_MAX
    }

    /// Intensity in units per tick given the previous event time of this pixel.
    /// Returns `None` for filler events and zero-length spans.
    pub fn intensity_since(&self, t_prev: Tick) -> Option<f64> {
        match self.d {
            D_ZERO => Some(0.0),
            d if d <= D_MAX => {
                let dt = self.t.checked_sub(t_prev)?;
                if dt == 0 {
                    None
                } else {
                    Some(2f64.powi(d as i32) / dt as f64)
                }
            }
            _ => None,
        }
    }
}

/// Origin of an event stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Framed = 0,
    Dvs = 1,
    Adder = 2,
    Simulated = 3,
}

impl SourceKind {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Self::Framed),
            1 => Some(Self::Dvs),
            2 => Some(Self::Adder),
            3 => Some(Self::Simulated),
            _ => None,
        }
    }
}

/// Pixel integration scheme.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PixelMode {
    /// Multi-node list preserving every queued edge event.
    List = 0,
    /// Single node with one candidate event.
    #[default]
    Collapse = 1,
}

impl PixelMode {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Self::List),
            1 => Some(Self::Collapse),
            _ => None,
        }
    }
}

/// Errors raised when plane or sensitivity parameters are inconsistent.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum ParamError {
    /// Width or height is zero
    #[error("plane dimensions must be nonzero, got {0}x{1}")]
    EmptyPlane(u16, u16),

    /// Channel count other than 1 or 3
    #[error("channels must be 1 or 3, got {0}")]
    Channels(u8),

    /// A tick parameter is zero
    #[error("`{0}` must be positive")]
    ZeroTicks(&'static str),

    /// Δt_max shorter than one reference interval
    #[error("dt_max ({dt_max}) must be at least dt_ref ({dt_ref})")]
    DtMaxBelowRef { dt_ref: u32, dt_max: u32 },

    /// Framed sources need Δt_s to be a whole number of reference intervals
    #[error("dt_s ({dt_s}) is not a multiple of dt_ref ({dt_ref})")]
    TpsNotMultiple { dt_s: u32, dt_ref: u32 },

    /// Contrast thresholds out of order or out of range
    #[error("sensitivity out of range: M={m}, M_max={m_max}, M_v={m_v}")]
    Sensitivity { m: u8, m_max: u8, m_v: u32 },
}

/// Geometry and timing of an event plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaneParams {
    pub width: u16,
    pub height: u16,
    pub channels: u8,
    /// Ticks per second.
    pub dt_s: u32,
    /// Ticks per reference interval.
    pub dt_ref: u32,
    /// Longest span of the first event at a new intensity level.
    pub dt_max: u32,
    pub source_kind: SourceKind,
}

impl PlaneParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.width == 0 || self.height == 0 {
            return Err(ParamError::EmptyPlane(self.width, self.height));
        }
        if self.channels != 1 && self.channels != 3 {
            return Err(ParamError::Channels(self.channels));
        }
        for (name, v) in [("dt_s", self.dt_s), ("dt_ref", self.dt_ref), ("dt_max", self.dt_max)] {
            if v == 0 {
                return Err(ParamError::ZeroTicks(name));
            }
        }
        if self.dt_max < self.dt_ref {
            return Err(ParamError::DtMaxBelowRef { dt_ref: self.dt_ref, dt_max: self.dt_max });
        }
        if self.source_kind == SourceKind::Framed && self.dt_s % self.dt_ref != 0 {
            return Err(ParamError::TpsNotMultiple { dt_s: self.dt_s, dt_ref: self.dt_ref });
        }
        Ok(())
    }

    /// Warning text when Δt_ref cannot represent the brightest 8-bit value.
    pub fn dt_ref_warning(&self, i_max: u32) -> Option<String> {
        (self.dt_ref < i_max).then(|| {
            format!(
                "dt_ref={} is below the source maximum intensity {}; bright pixels will saturate",
                self.dt_ref, i_max
            )
        })
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn contains(&self, x: u16, y: u16, c: u8) -> bool {
        x < self.width && y < self.height && c < self.channels
    }
}

/// Contrast-threshold controls in intensity units per reference interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensitivityParams {
    pub m: u8,
    pub m_max: u8,
    /// Reference intervals per unit of threshold growth.
    pub m_v: u32,
    pub feature_radius: u16,
}

impl SensitivityParams {
    pub const LOSSLESS: Self = Self { m: 0, m_max: 0, m_v: 1, feature_radius: 0 };

    pub fn validate(&self) -> Result<(), ParamError> {
        if self.m > self.m_max || self.m_v == 0 {
            return Err(ParamError::Sensitivity { m: self.m, m_max: self.m_max, m_v: self.m_v });
        }
        Ok(())
    }
}

impl Default for SensitivityParams {
    fn default() -> Self {
        Self::LOSSLESS
    }
}

/// Canonical stream order: time, then raster position. The sort is stable, so events
/// of one pixel channel sharing a timestamp keep their order.
pub fn sort_by_time(events: &mut [Event]) {
    events.sort_by_key(|e| (e.t, e.y, e.x, e.c));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> PlaneParams {
        PlaneParams {
            width: 4,
            height: 4,
            channels: 1,
            dt_s: 255 * 30,
            dt_ref: 255,
            dt_max: 255 * 30,
            source_kind: SourceKind::Framed,
        }
    }

    #[test]
    fn intensity_of_max_white() {
        let e = Event::new(0, 0, 0, 7, 128);
        assert_eq!(e.intensity_since(0), Some(1.0));
        assert_eq!(Event::new(0, 0, 0, D_ZERO, 10).intensity_since(0), Some(0.0));
        assert_eq!(Event::new(0, 0, 0, D_FILLER, 10).intensity_since(0), None);
        assert_eq!(Event::new(0, 0, 0, 3, 10).intensity_since(10), None);
    }

    #[test]
    fn plane_validation() {
        assert!(plane().validate().is_ok());
        let mut p = plane();
        p.dt_max = 100;
        assert!(matches!(p.validate(), Err(ParamError::DtMaxBelowRef { .. })));
        let mut p = plane();
        p.channels = 2;
        assert_eq!(p.validate(), Err(ParamError::Channels(2)));
        let mut p = plane();
        p.dt_s = 1000;
        assert!(matches!(p.validate(), Err(ParamError::TpsNotMultiple { .. })));
        assert!(plane().dt_ref_warning(255).is_none());
        let mut p = plane();
        p.dt_ref = 100;
        p.dt_s = 3000;
        assert!(p.dt_ref_warning(255).is_some());
    }

    #[test]
    fn sensitivity_validation() {
        assert!(SensitivityParams::LOSSLESS.validate().is_ok());
        let bad = SensitivityParams { m: 5, m_max: 3, m_v: 1, feature_radius: 0 };
        assert!(bad.validate().is_err());
    }
}
