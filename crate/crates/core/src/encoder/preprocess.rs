use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{resample_values, ImageBuffer};
use crate::tensor::TensorF32;

/// Square resize followed by per-channel standardization. `mean` and `std`
/// are expressed in 0..255 pixel units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Preprocess {
    pub size: usize,
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl Default for Preprocess {
    fn default() -> Self {
        Self::sam()
    }
}

impl Preprocess {
    /// The published SAM pixel statistics at the 1024x1024 input size.
    pub fn sam() -> Self {
        Self {
            size: 1024,
            mean: [123.675, 116.28, 103.53],
            std: [58.395, 57.12, 57.375],
        }
    }

    /// ImageNet-21k ViT checkpoints: inputs scaled to [-1, 1].
    pub fn vit() -> Self {
        Self { size: 224, mean: [127.5; 3], std: [127.5; 3] }
    }

    pub fn id(&self) -> String {
        format!("sq{}-m{:?}-s{:?}", self.size, self.mean, self.std)
    }
}

/// Resizes to `size x size` and standardizes, producing `[1, 3, size, size]`.
/// Grayscale inputs are replicated to three channels.
pub fn preprocess(img: &ImageBuffer, pp: &Preprocess) -> Result<TensorF32> {
    if pp.size == 0 || pp.std.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Config(format!("invalid preprocessing {pp:?}")));
    }
    let rgb = img.to_rgb();
    let to_px = 255.0 / rgb.scale().peak();
    let values = resample_values(&rgb, pp.size, pp.size);
    let plane = pp.size * pp.size;
    let mut out = vec![0.0f32; 3 * plane];
    for (i, px) in values.chunks_exact(3).enumerate() {
        for c in 0..3 {
            out[c * plane + i] = ((px[c] * to_px - pp.mean[c]) / pp.std[c]) as f32;
        }
    }
    TensorF32::new(vec![1, 3, pp.size, pp.size], out)
}

pub fn preprocess_for_sam(img: &ImageBuffer) -> TensorF32 {
    preprocess(img, &Preprocess::sam()).expect("SAM constants are valid")
}

/// Sidecar metadata written next to an exported model as `<model>.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelMetadata {
    pub model_id: Option<String>,
    pub opset: Option<i64>,
    /// Per-channel mean in `value_range` units.
    pub mean: Option<[f64; 3]>,
    pub std: Option<[f64; 3]>,
    /// Range pixel values are mapped into before standardization.
    pub value_range: Option<[f64; 2]>,
    pub input_size: Option<usize>,
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
}

impl ModelMetadata {
    pub fn sidecar_path(model_path: &Path) -> PathBuf {
        model_path.with_extension("json")
    }

    pub fn load_sidecar(model_path: &Path) -> Result<Option<Self>> {
        let path = Self::sidecar_path(model_path);
        if !path.is_file() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Folds the metadata's value range and statistics into pixel-unit
    /// preprocessing: `(lo + p/255 (hi - lo) - mean) / std` equals
    /// `(p - mean') / std'` with `mean' = (mean - lo) 255/(hi - lo)` and
    /// `std' = std 255/(hi - lo)`.
    pub fn apply_to(&self, base: &Preprocess) -> Result<Preprocess> {
        let [lo, hi] = self.value_range.unwrap_or([0.0, 255.0]);
        if !(hi > lo) {
            return Err(Error::Config(format!("invalid value_range [{lo}, {hi}]")));
        }
        let k = 255.0 / (hi - lo);
        let mut out = base.clone();
        if let Some(size) = self.input_size {
            out.size = size;
        }
        match (self.mean, self.std) {
            (Some(m), Some(s)) => {
                out.mean = m.map(|v| (v - lo) * k);
                out.std = s.map(|v| v * k);
            }
            (None, None) if self.value_range.is_some() => {
                // range given without statistics: plain affine rescale
                out.mean = [-lo * k; 3];
                out.std = [k; 3];
            }
            (None, None) => {}
            _ => return Err(Error::Config("metadata must give both mean and std".into())),
        }
        Ok(out)
    }
}
