//! Metrics backed by exported networks: LPIPS and the ViT cosine score.

use std::path::Path;

use crate::encoder::{build_encoder, preprocess, EncoderSpec, Preprocess};
use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::onnx::OnnxSession;
use crate::score::{samscore, ScoreResult};

use super::pixel::check_pair;

pub const LPIPS_SIZE: usize = 256;

/// Exported LPIPS distance graph: `image_a`, `image_b` as `[1,3,256,256]` in
/// `[-1, 1]`, scalar `distance` out.
pub struct LpipsModel {
    session: OnnxSession,
}

impl LpipsModel {
    pub fn load(model_path: &Path) -> Result<Self> {
        let shape = vec![1, 3, LPIPS_SIZE, LPIPS_SIZE];
        let session = OnnxSession::load(
            model_path,
            &[("image_a", shape.clone()), ("image_b", shape)],
        )?;
        Ok(Self { session })
    }

    pub fn distance(&self, a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
        check_pair(a, b)?;
        // [0, 255] -> [-1, 1]
        let pp = Preprocess { size: LPIPS_SIZE, mean: [127.5; 3], std: [127.5; 3] };
        let out = self.session.run_one(
            vec![("image_a", preprocess(a, &pp)?), ("image_b", preprocess(b, &pp)?)],
            "distance",
        )?;
        match out.data() {
            [d] => Ok(*d as f64),
            other => Err(Error::shape("a single distance value", other.len())),
        }
    }
}

/// LPIPS through the model named by an `onnx-model` spec.
pub fn lpips(spec: &EncoderSpec, a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    match spec {
        EncoderSpec::OnnxModel { model_path, .. } => LpipsModel::load(model_path)?.distance(a, b),
        other => Err(Error::Config(format!("lpips needs an onnx model, got {other}"))),
    }
}

/// The cosine score computed on the embeddings of another encoder (a
/// classification ViT in practice). Shares the scoring path with SAMScore.
pub fn vitscore(spec: &EncoderSpec, a: &ImageBuffer, b: &ImageBuffer) -> Result<ScoreResult> {
    let enc = build_encoder(spec)?;
    let (ea, eb) = (enc.embed(a, None)?, enc.embed(b, None)?);
    samscore(&ea, &eb)
}
