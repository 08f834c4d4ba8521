//! Content-structure similarity for image translation.
//!
//! `transcore` compares a source image with its translation by embedding
//! both with a vision encoder and averaging the per-position cosine
//! similarity of the two embedding maps. Around that score it provides the
//! usual pixel and learned baselines, seeded distortion generators, and the
//! sweep/correlation machinery used to check how each metric responds to
//! geometric deformation versus additive noise.

pub mod config;
pub mod distort;
pub mod encoder;
pub mod error;
pub mod metrics;
pub mod image;
pub mod onnx;
pub mod score;
pub mod sweep;
pub mod synth;
pub mod tensor;

pub use encoder::{EmbedKey, EmbeddingMap, Encoder, EncoderSpec, Role};
pub use error::{Error, ErrorClass, Result};
pub use image::{ImageBuffer, Scale};
pub use score::{cosine, samscore, similarity_map, ScoreResult, SimilarityMap};
pub use tensor::TensorF32;
