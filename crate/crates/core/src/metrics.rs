//! Frame quality metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// PSNR reported for identical frames.
pub const PSNR_CAP: f64 = 100.0;
const SSIM_WINDOW: usize = 8;
const C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum MetricsError {
    /// Reference and test frames differ in size
    #[error("frame sizes differ: {0} vs {1} samples")]
    SizeMismatch(usize, usize),

    /// Geometry does not describe the sample count
    #[error("{width}x{height}x{channels} does not match {len} samples")]
    Geometry { width: usize, height: usize, channels: usize, len: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quality {
    pub mse: f64,
    pub psnr: f64,
    pub ssim: f64,
}

pub fn mse(a: &[u8], b: &[u8]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::SizeMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = a.iter().zip(b).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum();
    Ok(sum / a.len() as f64)
}

/// `10·log10(255²/MSE)`, capped at [`PSNR_CAP`].
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP;
    }
    (10.0 * (255.0f64 * 255.0 / mse).log10()).min(PSNR_CAP)
}

/// Mean SSIM over sliding 8×8 windows of every channel. Planes smaller than a window
/// use one window covering the whole plane.
pub fn ssim(a: &[u8], b: &[u8], width: usize, height: usize, channels: usize) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::SizeMismatch(a.len(), b.len()));
    }
    if width * height * channels != a.len() {
        return Err(MetricsError::Geometry { width, height, channels, len: a.len() });
    }
    if a.is_empty() {
        return Ok(1.0);
    }
    let (ww, wh) = (SSIM_WINDOW.min(width), SSIM_WINDOW.min(height));
    let mut total = 0.0;
    let mut count = 0usize;
    for c in 0..channels {
        for y0 in 0..=height - wh {
            for x0 in 0..=width - ww {
                let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for y in y0..y0 + wh {
                    for x in x0..x0 + ww {
                        let i = (y * width + x) * channels + c;
                        let (va, vb) = (a[i] as f64, b[i] as f64);
                        sa += va;
                        sb += vb;
                        saa += va * va;
                        sbb += vb * vb;
                        sab += va * vb;
                    }
                }
                let n = (ww * wh) as f64;
                let (ma, mb) = (sa / n, sb / n);
                let va = saa / n - ma * ma;
                let vb = sbb / n - mb * mb;
                let cov = sab / n - ma * mb;
                total += ((2.0 * ma * mb + C1) * (2.0 * cov + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2));
                count += 1;
            }
        }
    }
    Ok(total / count as f64)
}

pub fn quality(a: &[u8], b: &[u8], width: usize, height: usize, channels: usize) -> Result<Quality, MetricsError> {
    let m = mse(a, b)?;
    Ok(Quality { mse: m, psnr: psnr_from_mse(m), ssim: ssim(a, b, width, height, channels)? })
}

/// Mean PSNR over paired frame sequences, computed from the pooled MSE.
pub fn sequence_psnr(reference: &[Vec<u8>], test: &[Vec<u8>]) -> Result<f64, MetricsError> {
    if reference.len() != test.len() {
        return Err(MetricsError::SizeMismatch(reference.len(), test.len()));
    }
    if reference.is_empty() {
        return Ok(PSNR_CAP);
    }
    let mut sum = 0.0;
    for (r, t) in reference.iter().zip(test) {
        sum += mse(r, t)?;
    }
    Ok(psnr_from_mse(sum / reference.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(w: usize, h: usize) -> Vec<u8> {
        (0..w * h).map(|i| if (i % w / 4 + i / w / 4) % 2 == 0 { 20 } else { 230 }).collect()
    }

    #[test]
    fn identical() {
        let a = pattern(16, 16);
        let q = quality(&a, &a, 16, 16, 1).unwrap();
        assert_eq!(q.mse, 0.0);
        assert_eq!(q.psnr, PSNR_CAP);
        assert!((q.ssim - 1.0).abs() < 1e-12);
    }

    #[test]
    fn off_by_one() {
        let a = pattern(16, 16);
        let b: Vec<u8> = a.iter().map(|v| v + 1).collect();
        let q = quality(&a, &b, 16, 16, 1).unwrap();
        assert_eq!(q.mse, 1.0);
        assert!((q.psnr - 20.0 * 255f64.log10()).abs() < 1e-9);
        assert!((q.psnr - 48.13).abs() < 0.01);
    }

    #[test]
    fn inverted_is_anticorrelated() {
        let a = pattern(16, 16);
        let b: Vec<u8> = a.iter().map(|v| 255 - v).collect();
        assert!(ssim(&a, &b, 16, 16, 1).unwrap() < -0.5);
    }

    #[test]
    fn mismatched_sizes() {
        assert!(matches!(mse(&[1, 2], &[1]), Err(MetricsError::SizeMismatch(2, 1))));
        assert!(matches!(ssim(&[1, 2], &[1, 2], 3, 1, 1), Err(MetricsError::Geometry { .. })));
    }
}
