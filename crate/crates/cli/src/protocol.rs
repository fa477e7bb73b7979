//! Wire protocol of the tuning service. Every WebSocket message is binary: one kind
//! byte followed by a JSON document or PNG image.

use serde::{Deserialize, Serialize};

/// Client to server: JSON control message.
pub const KIND_CONTROL: u8 = 0x01;
/// Server to client: JSON acknowledgement carrying the applied session state.
pub const KIND_ACK: u8 = 0x02;
/// Server to one client: JSON error; the session continues.
pub const KIND_ERROR: u8 = 0x03;
/// Server to clients: JSON metric tick.
pub const KIND_TICK: u8 = 0x04;
/// Server to clients: PNG preview frame.
pub const KIND_PREVIEW: u8 = 0x05;
/// Server to clients: JSON feature points of the latest input unit.
pub const KIND_FEATURES: u8 = 0x06;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    Intensity,
    D,
    Dt,
}

/// Control requests. Changes take effect at the next input unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Control {
    SetCrf {
        crf: u8,
    },
    /// Advanced overrides; absent fields keep their value.
    SetParams {
        #[serde(default)]
        dt_ref: Option<u32>,
        #[serde(default)]
        dt_max: Option<u32>,
        #[serde(default)]
        m: Option<u8>,
        #[serde(default)]
        m_max: Option<u8>,
        #[serde(default)]
        m_v: Option<u32>,
        #[serde(default)]
        feature_radius: Option<u16>,
    },
    /// `enabled` absent flips the current setting.
    ToggleFeatures {
        #[serde(default)]
        enabled: Option<bool>,
    },
    ToggleView {
        view: View,
    },
    /// `paused` absent flips the current setting.
    Pause {
        #[serde(default)]
        paused: Option<bool>,
    },
    /// Restart the source at the start of this ADU window.
    SeekAdu {
        index: u64,
    },
}

impl Control {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SetCrf { .. } => "set_crf",
            Self::SetParams { .. } => "set_params",
            Self::ToggleFeatures { .. } => "toggle_features",
            Self::ToggleView { .. } => "toggle_view",
            Self::Pause { .. } => "pause",
            Self::SeekAdu { .. } => "seek_adu",
        }
    }
}

/// A control message with an optional client-chosen id echoed in the reply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u64>,
    #[serde(flatten)]
    pub control: Control,
}

/// Session settings in effect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub source: String,
    pub width: u16,
    pub height: u16,
    /// Absent once individual thresholds were overridden.
    pub crf: Option<u8>,
    pub m: u8,
    pub m_max: u8,
    pub m_v: u32,
    pub feature_radius: u16,
    pub dt_ref: u32,
    pub dt_max: u32,
    pub view: View,
    pub features: bool,
    pub paused: bool,
    /// Input units processed so far.
    pub unit: u64,
    /// Input units per second of stream time.
    pub units_per_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u64>,
    /// Control type applied, or `hello` on connect.
    pub applied: String,
    pub state: SessionState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReply {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u64>,
    pub error: String,
}

/// Quality and rate of one input unit. Rates are bits per second of stream time,
/// averaged over the last second; quality is absent when the source has no reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tick {
    /// Stream time in ticks at the end of the unit.
    pub t: u64,
    pub unit: u64,
    pub mse: Option<f64>,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub source_bps: f64,
    pub adder_bps: f64,
    pub events_per_s: f64,
    /// Events emitted by this unit alone.
    pub unit_events: u64,
    pub crf: Option<u8>,
    pub view: View,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Features {
    pub unit: u64,
    pub points: Vec<(u16, u16)>,
}

/// Prefixes a payload with its kind byte.
pub fn frame(kind: u8, payload: &[u8]) -> Vec<u8> {
    let mut v = Vec::with_capacity(payload.len() + 1);
    v.push(kind);
    v.extend_from_slice(payload);
    v
}

pub fn json_frame<T: Serialize>(kind: u8, value: &T) -> Vec<u8> {
    frame(kind, &serde_json::to_vec(value).expect("protocol types serialize"))
}

/// Parses a client message: a control-kind binary frame, or bare JSON text.
pub fn parse_control(bytes: &[u8]) -> Result<Envelope, String> {
    let json = match bytes.first() {
        Some(&KIND_CONTROL) => &bytes[1..],
        Some(b'{') => bytes,
        Some(k) => return Err(format!("unexpected message kind 0x{k:02x}")),
        None => return Err("empty message".into()),
    };
    serde_json::from_slice(json).map_err(|e| format!("malformed control message: {e}"))
}
