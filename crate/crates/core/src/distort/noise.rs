use crate::error::{Error, Result};
use crate::image::{quantize_u8, ImageBuffer, Scale};

use super::RngStream;

/// `n` samples of zero-mean Gaussian noise with the given variance, drawn
/// in the order they are added to the image (row-major, channel-minor).
pub fn noise_field(n: usize, variance: f64, seed: u64) -> Vec<f64> {
    let sigma = variance.sqrt();
    let mut rng = RngStream::new(seed);
    (0..n).map(|_| sigma * rng.normal()).collect()
}

/// One 8-bit sample plus noise, clamped to `[0, 255]` and rounded half-up.
#[inline]
pub fn add_noise_u8(value: u8, noise: f64) -> u8 {
    quantize_u8(value as f64 + noise)
}

/// Additive Gaussian noise with `variance` on the 0..255 scale. Float
/// images receive the same noise rescaled to unit range and are clamped to
/// `[0, 1]` without quantization.
pub fn gaussian_noise(img: &ImageBuffer, variance: f64, seed: u64) -> Result<ImageBuffer> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::InvalidArgument(format!("noise variance {variance}")));
    }
    if variance == 0.0 {
        return Ok(img.clone());
    }
    let field = noise_field(img.len(), variance, seed);
    let to_native = img.scale().peak() / 255.0;
    let values = field.iter().enumerate().map(|(i, z)| img.value(i) + z * to_native);
    let out = img.with_values(values);
    debug_assert!(img.scale() == Scale::Unit || out.as_u8().is_some());
    Ok(out)
}
