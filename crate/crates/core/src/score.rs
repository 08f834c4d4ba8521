//! Spatial cosine similarity between embedding maps and its spatial mean.
//!
//! Each `(h, w)` position of two `C x H x W` embeddings holds a C-vector
//! ("fiber"). The similarity map holds the cosine of the two fibers at every
//! position, and the score is the mean of that map.

use std::path::Path;

use serde::Serialize;

use crate::encoder::EmbeddingMap;
use crate::error::{Error, Result};
use crate::image::{quantize_u8, save_png, ImageBuffer};

/// Norm threshold below which a fiber is treated as the zero vector.
pub const ZERO_NORM_EPS: f64 = 1e-12;

/// Cosine similarity with the zero-vector convention: two (near-)zero
/// vectors compare as 1, a zero vector against a nonzero one as 0.
pub fn cosine(u: &[f32], v: &[f32], eps: f64) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch(u.len(), v.len()));
    }
    if u.is_empty() {
        return Err(Error::InvalidArgument("cosine of empty vectors".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let (mut dot, mut nu, mut nv) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (a as f64, b as f64);
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    Ok(finish_cosine(dot, nu, nv, eps))
}

#[inline]
fn finish_cosine(dot: f64, norm_sq_u: f64, norm_sq_v: f64, eps: f64) -> f64 {
    let (nu, nv) = (norm_sq_u.sqrt(), norm_sq_v.sqrt());
    match (nu < eps, nv < eps) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => (dot / (nu * nv)).clamp(-1.0, 1.0),
    }
}

/// Per-position cosine similarities, `H x W` row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityMap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f32>,
}

impl SimilarityMap {
    pub fn at(&self, h: usize, w: usize) -> f32 {
        self.values[h * self.width + w]
    }
}

/// Mean similarity plus the map it came from.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreResult {
    pub score: f64,
    #[serde(skip)]
    pub map: SimilarityMap,
    pub pair_id: Option<String>,
    pub encoder: Option<String>,
}

impl ScoreResult {
    pub fn with_meta(mut self, pair_id: impl Into<String>, encoder: impl Into<String>) -> Self {
        self.pair_id = Some(pair_id.into());
        self.encoder = Some(encoder.into());
        self
    }
}

/// Accumulates dot products and squared norms channel-major, which walks
/// both `C x H x W` buffers contiguously.
fn fiber_cosines(x: &EmbeddingMap, y: &EmbeddingMap) -> Result<Vec<f64>> {
    if x.shape() != y.shape() {
        return Err(Error::shape(x.shape(), y.shape()));
    }
    let (c, h, w) = x.shape();
    let plane = h * w;
    let mut dot = vec![0.0f64; plane];
    let mut nx = vec![0.0f64; plane];
    let mut ny = vec![0.0f64; plane];
    for ch in 0..c {
        let xs = &x.data()[ch * plane..(ch + 1) * plane];
        let ys = &y.data()[ch * plane..(ch + 1) * plane];
        for i in 0..plane {
            let (a, b) = (xs[i] as f64, ys[i] as f64);
            dot[i] += a * b;
            nx[i] += a * a;
            ny[i] += b * b;
        }
    }
    Ok((0..plane)
        .map(|i| finish_cosine(dot[i], nx[i], ny[i], ZERO_NORM_EPS))
        .collect())
}

pub fn similarity_map(x: &EmbeddingMap, y: &EmbeddingMap) -> Result<SimilarityMap> {
    let (_, h, w) = x.shape();
    let values = fiber_cosines(x, y)?.into_iter().map(|v| v as f32).collect();
    Ok(SimilarityMap { height: h, width: w, values })
}

/// Mean spatial cosine similarity between two embedding maps.
pub fn samscore(x: &EmbeddingMap, y: &EmbeddingMap) -> Result<ScoreResult> {
    let (_, h, w) = x.shape();
    let cos = fiber_cosines(x, y)?;
    let score = cos.iter().sum::<f64>() / cos.len() as f64;
    let map = SimilarityMap { height: h, width: w, values: cos.iter().map(|&v| v as f32).collect() };
    Ok(ScoreResult { score, map, pair_id: None, encoder: None })
}

/// Grayscale rendering of a similarity map: -1 maps to 0, +1 to 255,
/// rounded half-up.
pub fn heatmap_image(map: &SimilarityMap) -> ImageBuffer {
    let data = map
        .values
        .iter()
        .map(|&v| quantize_u8((v as f64 + 1.0) * 0.5 * 255.0))
        .collect();
    ImageBuffer::from_u8(map.height, map.width, 1, data).expect("map dims are consistent")
}

pub fn render_heatmap(map: &SimilarityMap, out_path: impl AsRef<Path>) -> Result<()> {
    save_png(&heatmap_image(map), out_path)
}
