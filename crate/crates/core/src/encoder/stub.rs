//! Gradient-orientation histogram encoder.
//!
//! Luminance is computed as `299 R + 587 G + 114 B` (per-mille weights) so
//! that 8-bit inputs stay in exact integer arithmetic; the final per-patch
//! normalization makes the overall scale irrelevant.

use crate::error::{Error, Result};
use crate::image::{ImageBuffer, Scale};

use super::EmbeddingMap;

pub const STUB_PATCH: usize = 16;
pub const STUB_CHANNELS: usize = 8;
const NORM_EPS: f64 = 1e-12;

fn luminance(img: &ImageBuffer) -> Vec<f64> {
    let unit = if img.scale() == Scale::U8 { 1.0 } else { 255.0 };
    let n = img.height() * img.width();
    (0..n)
        .map(|i| {
            let v = if img.channels() == 1 {
                1000.0 * img.value(i)
            } else {
                299.0 * img.value(3 * i) + 587.0 * img.value(3 * i + 1) + 114.0 * img.value(3 * i + 2)
            };
            v * unit
        })
        .collect()
}

/// Orientation bin of a gradient in image coordinates (y down), eight
/// 45-degree sectors starting at the +x axis. Rotating the vector by a
/// quarter turn moves it exactly two bins.
#[inline]
pub(crate) fn orientation_bin(gx: f64, gy: f64) -> usize {
    let (quadrant, u, v) = if gx > 0.0 && gy >= 0.0 {
        (0, gx, gy)
    } else if gx <= 0.0 && gy > 0.0 {
        (1, gy, -gx)
    } else if gx < 0.0 && gy <= 0.0 {
        (2, -gx, -gy)
    } else {
        (3, -gy, gx)
    };
    2 * quadrant + usize::from(v >= u)
}

/// Encodes an image as an `8 x floor(H/16) x floor(W/16)` map of
/// L2-normalized, magnitude-weighted gradient orientation histograms.
///
/// Gradients are central differences over the whole image with edge
/// replication at the borders. Patches with no gradient stay all-zero.
pub fn stub_encode(img: &ImageBuffer) -> Result<EmbeddingMap> {
    let (h, w) = (img.height(), img.width());
    if h.min(w) < STUB_PATCH {
        return Err(Error::ImageTooSmall(format!(
            "{h}x{w} is below the {STUB_PATCH}-pixel patch size"
        )));
    }
    let lum = luminance(img);
    let at = |y: usize, x: usize| lum[y * w + x];
    let (ph, pw) = (h / STUB_PATCH, w / STUB_PATCH);
    let mut hist = vec![[0.0f64; STUB_CHANNELS]; ph * pw];
    for y in 0..ph * STUB_PATCH {
        let (up, down) = (y.saturating_sub(1), (y + 1).min(h - 1));
        for x in 0..pw * STUB_PATCH {
            let (left, right) = (x.saturating_sub(1), (x + 1).min(w - 1));
            let gx = (at(y, right) - at(y, left)) * 0.5;
            let gy = (at(down, x) - at(up, x)) * 0.5;
            if gx == 0.0 && gy == 0.0 {
                continue;
            }
            let mag = (gx * gx + gy * gy).sqrt();
            hist[(y / STUB_PATCH) * pw + x / STUB_PATCH][orientation_bin(gx, gy)] += mag;
        }
    }
    let plane = ph * pw;
    let mut data = vec![0.0f32; STUB_CHANNELS * plane];
    for (p, bins) in hist.iter().enumerate() {
        let norm = bins.iter().map(|b| b * b).sum::<f64>().sqrt();
        if norm <= NORM_EPS {
            continue;
        }
        for (b, v) in bins.iter().enumerate() {
            data[b * plane + p] = (v / norm) as f32;
        }
    }
    EmbeddingMap::new(STUB_CHANNELS, ph, pw, data)
}
