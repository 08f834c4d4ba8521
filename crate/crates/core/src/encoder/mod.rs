//! Image encoders producing `C x H x W` embedding maps.
//!
//! Three backends sit behind [`Encoder`]:
//!
//! * `stub`: an analytic gradient-orientation encoder, cheap and deterministic;
//! * `precomputed`: NPY files named `<pair_id>.<role>.npy` in a directory;
//! * `onnx-model`: an exported vision encoder run through tract.

mod cache;
mod preprocess;
mod stub;

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::onnx::OnnxSession;
use crate::tensor::{read_tensor_file, TensorF32};

pub use cache::{CachedEncoder, CACHE_ENV};
pub use preprocess::{preprocess, preprocess_for_sam, ModelMetadata, Preprocess};
pub use stub::{stub_encode, STUB_CHANNELS, STUB_PATCH};

/// SAM ViT-L image embedding shape for a 1024x1024 input.
pub const SAM_EMBEDDING_SHAPE: [usize; 3] = [256, 64, 64];
/// Patch-token grid of a ViT-B/16 at 224x224 with the class token dropped.
pub const VIT_EMBEDDING_SHAPE: [usize; 3] = [768, 14, 14];

/// Dense `C x H x W` float embedding with finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl EmbeddingMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidArgument(format!(
                "empty embedding {channels}x{height}x{width}"
            )));
        }
        if data.len() != channels * height * width {
            return Err(Error::shape(channels * height * width, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Backend("embedding contains non-finite values".into()));
        }
        Ok(Self { channels, height, width, data })
    }

    /// Accepts `[C, H, W]` or a batch of one, `[1, C, H, W]`.
    pub fn from_tensor(t: TensorF32) -> Result<Self> {
        let (shape, data) = t.into_parts();
        match shape.as_slice() {
            &[c, h, w] | &[1, c, h, w] => Self::new(c, h, w, data),
            other => Err(Error::shape("[C, H, W] or [1, C, H, W]", other)),
        }
    }

    pub fn to_tensor(&self) -> TensorF32 {
        TensorF32::new(vec![self.channels, self.height, self.width], self.data.clone())
            .expect("embedding dims are valid")
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// The channel vector at spatial position `(h, w)`.
    pub fn fiber(&self, h: usize, w: usize) -> Vec<f32> {
        let plane = self.height * self.width;
        (0..self.channels).map(|c| self.data[c * plane + h * self.width + w]).collect()
    }

    fn check_expected(self, expected: Option<[usize; 3]>) -> Result<Self> {
        match expected {
            Some(e) if e != [self.channels, self.height, self.width] => {
                Err(Error::shape(e, [self.channels, self.height, self.width]))
            }
            _ => Ok(self),
        }
    }
}

/// Which image of a pair an embedding belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Src,
    Gen,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Src => "src",
            Role::Gen => "gen",
        }
    }
}

/// Identifies an image for backends that look embeddings up by name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbedKey {
    pub pair_id: String,
    pub role: Role,
}

impl EmbedKey {
    pub fn new(pair_id: impl Into<String>, role: Role) -> Self {
        Self { pair_id: pair_id.into(), role }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EncoderSpec {
    Stub {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expected_shape: Option<[usize; 3]>,
    },
    Precomputed {
        embed_dir: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expected_shape: Option<[usize; 3]>,
    },
    OnnxModel {
        model_path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expected_shape: Option<[usize; 3]>,
        #[serde(default)]
        preprocess: Preprocess,
    },
}

/// Default preprocessing and output shape applied when parsing `onnx:` URIs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelPreset {
    Sam,
    Vit,
}

impl EncoderSpec {
    pub fn stub() -> Self {
        EncoderSpec::Stub { expected_shape: None }
    }

    /// Parses `stub`, `onnx:<path>` or `precomputed:<dir>`.
    pub fn parse(uri: &str) -> Result<Self> {
        Self::parse_with(uri, ModelPreset::Sam)
    }

    pub fn parse_with(uri: &str, preset: ModelPreset) -> Result<Self> {
        let (scheme, rest) = uri.split_once(':').unwrap_or((uri, ""));
        match (scheme, rest) {
            ("stub", "") => Ok(Self::stub()),
            ("precomputed", dir) if !dir.is_empty() => Ok(EncoderSpec::Precomputed {
                embed_dir: dir.into(),
                expected_shape: None,
            }),
            ("onnx", path) if !path.is_empty() => Ok(Self::onnx(path, preset)),
            _ => Err(Error::Config(format!(
                "unrecognized encoder {uri:?}; expected stub | onnx:<path> | precomputed:<dir>"
            ))),
        }
    }

    pub fn onnx(path: impl Into<PathBuf>, preset: ModelPreset) -> Self {
        let (expected, preprocess) = match preset {
            ModelPreset::Sam => (SAM_EMBEDDING_SHAPE, Preprocess::sam()),
            ModelPreset::Vit => (VIT_EMBEDDING_SHAPE, Preprocess::vit()),
        };
        EncoderSpec::OnnxModel {
            model_path: path.into(),
            expected_shape: Some(expected),
            preprocess,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            EncoderSpec::Stub { .. } => "stub",
            EncoderSpec::Precomputed { .. } => "precomputed",
            EncoderSpec::OnnxModel { .. } => "onnx-model",
        }
    }

    pub fn expected_shape(&self) -> Option<[usize; 3]> {
        match self {
            EncoderSpec::Stub { expected_shape }
            | EncoderSpec::Precomputed { expected_shape, .. }
            | EncoderSpec::OnnxModel { expected_shape, .. } => *expected_shape,
        }
    }
}

impl fmt::Display for EncoderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EncoderSpec::Stub { .. } => write!(f, "stub"),
            EncoderSpec::Precomputed { embed_dir, .. } => {
                write!(f, "precomputed:{}", embed_dir.display())
            }
            EncoderSpec::OnnxModel { model_path, .. } => write!(f, "onnx:{}", model_path.display()),
        }
    }
}

/// The embedding function. Implementations are deterministic for fixed
/// inputs and shareable across threads.
pub trait Encoder: Send + Sync {
    fn embed(&self, img: &ImageBuffer, key: Option<&EmbedKey>) -> Result<EmbeddingMap>;

    /// Identifies the backend and its preprocessing, used for cache keys and
    /// report metadata.
    fn id(&self) -> String;
}

pub struct StubEncoder {
    expected_shape: Option<[usize; 3]>,
}

impl Encoder for StubEncoder {
    fn embed(&self, img: &ImageBuffer, _key: Option<&EmbedKey>) -> Result<EmbeddingMap> {
        stub_encode(img)?.check_expected(self.expected_shape)
    }

    fn id(&self) -> String {
        "stub:orientation-histogram-v1".into()
    }
}

pub struct PrecomputedEncoder {
    dir: PathBuf,
    expected_shape: Option<[usize; 3]>,
}

impl PrecomputedEncoder {
    pub fn path_for(dir: &Path, key: &EmbedKey) -> PathBuf {
        dir.join(format!("{}.{}.npy", key.pair_id, key.role.as_str()))
    }
}

impl Encoder for PrecomputedEncoder {
    fn embed(&self, _img: &ImageBuffer, key: Option<&EmbedKey>) -> Result<EmbeddingMap> {
        let key = key.ok_or_else(|| {
            Error::InvalidArgument("precomputed embeddings need a pair id and role".into())
        })?;
        let path = Self::path_for(&self.dir, key);
        if !path.is_file() {
            return Err(Error::MissingEmbedding(path));
        }
        let t = read_tensor_file(&path)?;
        if t.shape().len() != 3 {
            return Err(Error::shape("[C, H, W]", t.shape()));
        }
        EmbeddingMap::from_tensor(t)?.check_expected(self.expected_shape)
    }

    fn id(&self) -> String {
        format!("precomputed:{}", self.dir.display())
    }
}

pub struct OnnxEncoder {
    session: OnnxSession,
    preprocess: Preprocess,
    input: String,
    output: String,
    expected_shape: Option<[usize; 3]>,
    model_id: String,
}

impl OnnxEncoder {
    /// Loads the model. A sibling `<model>.json` metadata file, when present,
    /// overrides normalization constants and tensor names.
    pub fn load(
        model_path: &Path,
        preprocess: &Preprocess,
        expected_shape: Option<[usize; 3]>,
    ) -> Result<Self> {
        let meta = ModelMetadata::load_sidecar(model_path)?;
        let preprocess = match &meta {
            Some(m) => m.apply_to(preprocess)?,
            None => preprocess.clone(),
        };
        let input = meta
            .as_ref()
            .and_then(|m| m.input_names.first().cloned())
            .unwrap_or_else(|| "image".into());
        let output = meta
            .as_ref()
            .and_then(|m| m.output_names.first().cloned())
            .unwrap_or_else(|| "embedding".into());
        let session = OnnxSession::load(
            model_path,
            &[(input.as_str(), vec![1, 3, preprocess.size, preprocess.size])],
        )?;
        let model_id = meta
            .and_then(|m| m.model_id)
            .unwrap_or_else(|| model_path.display().to_string());
        Ok(Self { session, preprocess, input, output, expected_shape, model_id })
    }
}

impl Encoder for OnnxEncoder {
    fn embed(&self, img: &ImageBuffer, _key: Option<&EmbedKey>) -> Result<EmbeddingMap> {
        let x = preprocess(img, &self.preprocess)?;
        let out = self.session.run_one(vec![(self.input.as_str(), x)], &self.output)?;
        let shape = out.shape().to_vec();
        if shape.len() != 4 || shape[0] != 1 {
            return Err(Error::shape("[1, C, H, W]", shape));
        }
        EmbeddingMap::from_tensor(out)?.check_expected(self.expected_shape)
    }

    fn id(&self) -> String {
        format!("onnx:{}|{}", self.model_id, self.preprocess.id())
    }
}

/// Builds an encoder, wrapping model backends in the on-disk embedding cache
/// when `TRANSCORE_CACHE` is set.
pub fn build_encoder(spec: &EncoderSpec) -> Result<Arc<dyn Encoder>> {
    let cache = std::env::var_os(CACHE_ENV).map(PathBuf::from);
    build_encoder_with_cache(spec, cache)
}

pub fn build_encoder_with_cache(
    spec: &EncoderSpec,
    cache_dir: Option<PathBuf>,
) -> Result<Arc<dyn Encoder>> {
    Ok(match spec {
        EncoderSpec::Stub { expected_shape } => {
            Arc::new(StubEncoder { expected_shape: *expected_shape })
        }
        EncoderSpec::Precomputed { embed_dir, expected_shape } => Arc::new(PrecomputedEncoder {
            dir: embed_dir.clone(),
            expected_shape: *expected_shape,
        }),
        EncoderSpec::OnnxModel { model_path, expected_shape, preprocess } => {
            let enc = OnnxEncoder::load(model_path, preprocess, *expected_shape)?;
            match cache_dir {
                Some(dir) => Arc::new(CachedEncoder::new(enc, dir)?),
                None => Arc::new(enc),
            }
        }
    })
}

/// One-shot embedding: builds the backend described by `spec` and runs it.
pub fn embed(spec: &EncoderSpec, img: &ImageBuffer, key: Option<&EmbedKey>) -> Result<EmbeddingMap> {
    build_encoder(spec)?.embed(img, key)
}
