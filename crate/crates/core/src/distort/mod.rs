//! Seeded image distortions: piecewise affine warps, additive Gaussian
//! noise and color jitter.

mod jitter;
mod noise;
mod rng;
mod seed;
mod warp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

pub use jitter::{color_jitter, JitterFactors};
pub use noise::{add_noise_u8, gaussian_noise, noise_field};
pub use rng::RngStream;
pub use seed::{derive_seed, mix64};
pub use warp::{control_displacements, piecewise_affine, warp_with_displacements};

pub const DEFAULT_GRID: usize = 4;
pub const MAX_WARP_DEGREE: f64 = 0.1;
pub const MAX_NOISE_VARIANCE: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistortionKind {
    PiecewiseAffine,
    GaussianNoise,
    ColorJitter,
}

impl DistortionKind {
    pub const ALL: [DistortionKind; 3] =
        [Self::PiecewiseAffine, Self::GaussianNoise, Self::ColorJitter];

    pub fn name(self) -> &'static str {
        match self {
            Self::PiecewiseAffine => "piecewise-affine",
            Self::GaussianNoise => "gaussian-noise",
            Self::ColorJitter => "color-jitter",
        }
    }
}

impl fmt::Display for DistortionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistortionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown distortion {s:?}")))
    }
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

/// One distortion instance. `degree` is the warp's standard deviation as a
/// fraction of the shorter side, the noise variance on the 0..255 scale, or
/// the jitter strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistortionSpec {
    pub kind: DistortionKind,
    pub degree: f64,
    pub seed: u64,
    #[serde(default = "default_grid")]
    pub grid_rows: usize,
    #[serde(default = "default_grid")]
    pub grid_cols: usize,
    /// Jitter only: apply `1 + degree` factors and a fixed hue shift instead
    /// of sampling them.
    #[serde(default)]
    pub deterministic: bool,
}

impl DistortionSpec {
    pub fn new(kind: DistortionKind, degree: f64, seed: u64) -> Self {
        Self {
            kind,
            degree,
            seed,
            grid_rows: DEFAULT_GRID,
            grid_cols: DEFAULT_GRID,
            deterministic: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.degree;
        if !d.is_finite() || d < 0.0 {
            return Err(Error::Config(format!("{} degree {d} must be finite and >= 0", self.kind)));
        }
        match self.kind {
            DistortionKind::PiecewiseAffine => {
                if d > MAX_WARP_DEGREE {
                    return Err(Error::Config(format!(
                        "piecewise-affine degree {d} outside [0, {MAX_WARP_DEGREE}]"
                    )));
                }
                if self.grid_rows < 2 || self.grid_cols < 2 {
                    return Err(Error::Config(format!(
                        "warp grid {}x{} needs at least 2x2 points",
                        self.grid_rows, self.grid_cols
                    )));
                }
            }
            DistortionKind::GaussianNoise if d > MAX_NOISE_VARIANCE => {
                return Err(Error::Config(format!(
                    "gaussian-noise variance {d} outside [0, {MAX_NOISE_VARIANCE}]"
                )));
            }
            DistortionKind::ColorJitter if d > 1.0 => {
                return Err(Error::Config(format!("color-jitter degree {d} outside [0, 1]")));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn apply(&self, img: &ImageBuffer) -> Result<ImageBuffer> {
        self.validate()?;
        match self.kind {
            DistortionKind::PiecewiseAffine => {
                piecewise_affine(img, self.degree, self.seed, self.grid_rows, self.grid_cols)
            }
            DistortionKind::GaussianNoise => gaussian_noise(img, self.degree, self.seed),
            DistortionKind::ColorJitter => {
                let factors = if self.deterministic {
                    JitterFactors::deterministic(self.degree)
                } else {
                    JitterFactors::sample(self.degree, self.seed)
                };
                color_jitter(img, &factors)
            }
        }
    }
}
