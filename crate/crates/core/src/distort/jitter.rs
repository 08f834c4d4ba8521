//! Brightness, contrast, saturation and hue jitter, applied in that order
//! on unit-range RGB with clamping after each step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

use super::RngStream;

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// Multiplicative factors for brightness, contrast and saturation, and a hue
/// rotation in turns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterFactors {
    pub brightness: f64,
    pub contrast: f64,
    pub saturation: f64,
    pub hue_turns: f64,
}

impl JitterFactors {
    pub const IDENTITY: Self = Self { brightness: 1.0, contrast: 1.0, saturation: 1.0, hue_turns: 0.0 };

    /// Factors drawn from `U[1-d, 1+d]` and a hue shift of `U[-d, d] / 2`
    /// turns, in that order from one stream.
    pub fn sample(degree: f64, seed: u64) -> Self {
        if degree == 0.0 {
            return Self::IDENTITY;
        }
        let mut rng = RngStream::new(seed);
        let lo = (1.0 - degree).max(0.0);
        let hi = 1.0 + degree;
        Self {
            brightness: rng.uniform_range(lo, hi),
            contrast: rng.uniform_range(lo, hi),
            saturation: rng.uniform_range(lo, hi),
            hue_turns: 0.5 * rng.uniform_range(-degree, degree),
        }
    }

    /// Fixed factors `1 + d` and a hue shift of `d / 4` turns.
    pub fn deterministic(degree: f64) -> Self {
        Self {
            brightness: 1.0 + degree,
            contrast: 1.0 + degree,
            saturation: 1.0 + degree,
            hue_turns: 0.25 * degree,
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }
}

fn blend(x: f64, anchor: f64, f: f64) -> f64 {
    ((x - anchor) * f + anchor).clamp(0.0, 1.0)
}

fn luma(p: &[f64]) -> f64 {
    LUMA[0] * p[0] + LUMA[1] * p[1] + LUMA[2] * p[2]
}

fn rgb_to_hsv(p: &[f64]) -> (f64, f64, f64) {
    let max = p[0].max(p[1]).max(p[2]);
    let min = p[0].min(p[1]).min(p[2]);
    let d = max - min;
    let s = if max > 0.0 { d / max } else { 0.0 };
    if d == 0.0 {
        return (0.0, s, max);
    }
    let h = if max == p[0] {
        ((p[1] - p[2]) / d).rem_euclid(6.0)
    } else if max == p[1] {
        (p[2] - p[0]) / d + 2.0
    } else {
        (p[0] - p[1]) / d + 4.0
    };
    (h / 6.0, s, max)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h6 = h.rem_euclid(1.0) * 6.0;
    let sector = (h6.floor() as usize).min(5);
    let f = h6 - sector as f64;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

/// Applies `factors` to an RGB image. Contrast pulls toward the image's mean
/// luma, saturation toward each pixel's own luma.
pub fn color_jitter(img: &ImageBuffer, factors: &JitterFactors) -> Result<ImageBuffer> {
    if img.channels() != 3 {
        return Err(Error::GrayscaleUnsupported);
    }
    if factors.is_identity() {
        return Ok(img.clone());
    }
    let peak = img.scale().peak();
    let mut px: Vec<f64> = (0..img.len()).map(|i| img.value(i) / peak).collect();

    for v in &mut px {
        *v = (*v * factors.brightness).clamp(0.0, 1.0);
    }
    let n = px.len() / 3;
    let mean = px.chunks_exact(3).map(luma).sum::<f64>() / n as f64;
    for v in &mut px {
        *v = blend(*v, mean, factors.contrast);
    }
    for p in px.chunks_exact_mut(3) {
        let g = luma(p);
        for v in p.iter_mut() {
            *v = blend(*v, g, factors.saturation);
        }
    }
    if factors.hue_turns != 0.0 {
        for p in px.chunks_exact_mut(3) {
            let (h, s, v) = rgb_to_hsv(p);
            p.copy_from_slice(&hsv_to_rgb(h + factors.hue_turns, s, v));
        }
    }
    Ok(img.with_values(px.into_iter().map(|v| v.clamp(0.0, 1.0) * peak)))
}
