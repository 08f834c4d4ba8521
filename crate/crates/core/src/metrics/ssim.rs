//! Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), valid-mode
//! windows, computed per channel and averaged.

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

use super::pixel::check_pair;

pub const WINDOW: usize = 11;
pub const SIGMA: f64 = 1.5;
pub const K1: f64 = 0.01;
pub const K2: f64 = 0.03;

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
pub fn gaussian_taps() -> [f64; WINDOW] {
    let mut taps = [0.0; WINDOW];
    let c = (WINDOW / 2) as f64;
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - c;
        *t = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
    }
    let sum: f64 = taps.iter().sum();
    taps.map(|t| t / sum)
}

/// Valid-mode separable filter of a `h x w` plane.
fn filter_valid(plane: &[f64], h: usize, w: usize, taps: &[f64; WINDOW]) -> Vec<f64> {
    let (oh, ow) = (h - WINDOW + 1, w - WINDOW + 1);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        let src = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = taps.iter().zip(&src[x..x + WINDOW]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps.iter().enumerate().map(|(k, t)| t * rows[(y + k) * ow + x]).sum();
        }
    }
    out
}

pub fn ssim(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    check_pair(a, b)?;
    let (h, w, ch) = a.dims();
    if h.min(w) < WINDOW {
        return Err(Error::ImageTooSmall(format!("{h}x{w} is below the {WINDOW}x{WINDOW} window")));
    }
    let range = a.scale().peak();
    let c1 = (K1 * range).powi(2);
    let c2 = (K2 * range).powi(2);
    let taps = gaussian_taps();
    let mut total = 0.0;
    let mut count = 0usize;
    for c in 0..ch {
        let pa: Vec<f64> = (0..h * w).map(|i| a.value(i * ch + c)).collect();
        let pb: Vec<f64> = (0..h * w).map(|i| b.value(i * ch + c)).collect();
        let prod = |f: fn(f64, f64) -> f64| -> Vec<f64> {
            pa.iter().zip(&pb).map(|(&x, &y)| f(x, y)).collect()
        };
        let mu_a = filter_valid(&pa, h, w, &taps);
        let mu_b = filter_valid(&pb, h, w, &taps);
        let aa = filter_valid(&prod(|x, _| x * x), h, w, &taps);
        let bb = filter_valid(&prod(|_, y| y * y), h, w, &taps);
        let ab = filter_valid(&prod(|x, y| x * y), h, w, &taps);
        for i in 0..mu_a.len() {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}
