//! Constant-rate-factor presets mapping one quality knob to sensitivity parameters.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::SensitivityParams;

pub const CRF_LOSSLESS: u8 = 0;
pub const CRF_HIGH: u8 = 3;
pub const CRF_MEDIUM: u8 = 6;
pub const CRF_LOW: u8 = 9;
/// Bump when the table values change.
pub const CRF_TABLE_VERSION: u32 = 2;

/// One preset row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrfRow {
    pub m: u8,
    pub m_max: u8,
    pub m_v: u32,
    pub feature_radius: u16,
}

impl CrfRow {
    pub fn sensitivity(&self) -> SensitivityParams {
        SensitivityParams { m: self.m, m_max: self.m_max, m_v: self.m_v, feature_radius: self.feature_radius }
    }
}

/// Calibrated on the bundled synthetic corpus. Higher rates get smaller feature radii.
pub const CRF_TABLE: [CrfRow; 10] = [
    CrfRow { m: 0, m_max: 0, m_v: 1, feature_radius: 0 },
    CrfRow { m: 1, m_max: 2, m_v: 60, feature_radius: 6 },
    CrfRow { m: 2, m_max: 4, m_v: 45, feature_radius: 5 },
    CrfRow { m: 3, m_max: 6, m_v: 36, feature_radius: 5 },
    CrfRow { m: 4, m_max: 9, m_v: 30, feature_radius: 4 },
    CrfRow { m: 5, m_max: 12, m_v: 24, feature_radius: 4 },
    CrfRow { m: 6, m_max: 16, m_v: 20, feature_radius: 3 },
    CrfRow { m: 8, m_max: 21, m_v: 16, feature_radius: 3 },
    CrfRow { m: 10, m_max: 27, m_v: 12, feature_radius: 2 },
    CrfRow { m: 12, m_max: 34, m_v: 10, feature_radius: 2 },
];

#[derive(Error, Debug, Clone, PartialEq, Eq)]
#[error("CRF must be in 0..=9, got {0}")]
pub struct CrfError(pub u8);

pub fn crf_row(crf: u8) -> Result<CrfRow, CrfError> {
    CRF_TABLE.get(crf as usize).copied().ok_or(CrfError(crf))
}

pub fn crf_sensitivity(crf: u8) -> Result<SensitivityParams, CrfError> {
    crf_row(crf).map(|r| r.sensitivity())
}
