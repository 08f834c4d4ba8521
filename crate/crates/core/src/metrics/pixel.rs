use crate::error::{Error, Result};
use crate::image::ImageBuffer;

pub(crate) fn check_pair(a: &ImageBuffer, b: &ImageBuffer) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::shape(a.dims(), b.dims()));
    }
    if a.scale() != b.scale() {
        return Err(Error::shape(a.scale(), b.scale()));
    }
    Ok(())
}

/// Mean squared difference in native pixel units.
pub fn mse(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.len();
    let sum: f64 = (0..n)
        .map(|i| {
            let d = a.value(i) - b.value(i);
            d * d
        })
        .sum();
    Ok(sum / n as f64)
}

/// Root-mean-square difference in native pixel units.
pub fn l2_distance(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    mse(a, b).map(f64::sqrt)
}

/// Peak signal-to-noise ratio in dB. Identical images give `f64::INFINITY`.
pub fn psnr(a: &ImageBuffer, b: &ImageBuffer, peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument(format!("psnr peak must be positive, got {peak}")));
    }
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / m).log10())
}
