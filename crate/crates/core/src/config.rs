//! Manifest and run configuration files.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distort::{DistortionKind, DistortionSpec, DEFAULT_GRID};
use crate::encoder::EncoderSpec;
use crate::error::{Error, Result};
use crate::metrics::Metric;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairEntry {
    pub id: String,
    pub source: PathBuf,
    pub translated: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translated_domain_gt: Option<PathBuf>,
}

/// The image pairs to evaluate. Relative paths are resolved against the
/// manifest's own directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub pairs: Vec<PairEntry>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let mut m: Manifest = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in &mut m.pairs {
            for f in [&mut p.source, &mut p.translated]
                .into_iter()
                .chain(p.source_labels.as_mut())
                .chain(p.translated_domain_gt.as_mut())
            {
                if f.is_relative() {
                    *f = base.join(&*f);
                }
            }
        }
        m.validate()?;
        Ok(m)
    }

    /// Ids are unique, non-empty and usable as file name stems; every
    /// referenced file exists.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for p in &self.pairs {
            if p.id.is_empty() || p.id.contains(['/', '\\']) {
                return Err(Error::Config(format!("invalid pair id {:?}", p.id)));
            }
            if !seen.insert(p.id.as_str()) {
                return Err(Error::Config(format!("duplicate pair id {:?}", p.id)));
            }
            for f in [&p.source, &p.translated]
                .into_iter()
                .chain(p.source_labels.as_ref())
                .chain(p.translated_domain_gt.as_ref())
            {
                if !f.exists() {
                    return Err(Error::io(
                        f,
                        std::io::Error::new(std::io::ErrorKind::NotFound, "referenced by manifest"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmenterConfig {
    pub model_path: PathBuf,
    /// Network input `(height, width)`.
    pub size: (usize, usize),
    pub num_classes: usize,
    #[serde(default)]
    pub ignore_id: Option<u16>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub samscore: Option<EncoderSpec>,
    pub vitscore: Option<EncoderSpec>,
    pub lpips: Option<EncoderSpec>,
}

/// What the pixel metrics compare the (distorted) translation with.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PixelReference {
    #[default]
    Source,
    /// The pair's `translated_domain_gt` image.
    GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistortionGrid {
    pub kind: DistortionKind,
    #[serde(default)]
    pub degrees: Option<Vec<f64>>,
    #[serde(default = "default_grid")]
    pub grid_rows: usize,
    #[serde(default = "default_grid")]
    pub grid_cols: usize,
    #[serde(default)]
    pub deterministic: bool,
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

pub fn default_degrees(kind: DistortionKind) -> Vec<f64> {
    match kind {
        DistortionKind::PiecewiseAffine => vec![0.0, 0.01, 0.02, 0.03, 0.04, 0.05],
        DistortionKind::GaussianNoise => vec![0.0, 50.0, 100.0, 150.0, 200.0, 250.0],
        DistortionKind::ColorJitter => vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25],
    }
}

impl DistortionGrid {
    pub fn new(kind: DistortionKind) -> Self {
        Self { kind, degrees: None, grid_rows: DEFAULT_GRID, grid_cols: DEFAULT_GRID, deterministic: false }
    }

    /// The configured degrees, ascending, de-duplicated, with 0 always
    /// present.
    pub fn resolved_degrees(&self) -> Vec<f64> {
        let mut d = self.degrees.clone().unwrap_or_else(|| default_degrees(self.kind));
        d.push(0.0);
        d.sort_by(f64::total_cmp);
        d.dedup();
        d
    }

    pub fn spec(&self, degree: f64, seed: u64) -> DistortionSpec {
        DistortionSpec {
            kind: self.kind,
            degree,
            seed,
            grid_rows: self.grid_rows,
            grid_cols: self.grid_cols,
            deterministic: self.deterministic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for d in self.resolved_degrees() {
            self.spec(d, 0).validate()?;
        }
        Ok(())
    }
}

fn default_metrics() -> Vec<Metric> {
    vec![Metric::Samscore, Metric::L2, Metric::Psnr, Metric::Ssim]
}

fn default_seeds() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("transcore-out")
}

/// One run: which metrics, how to compute them, and which distortions to
/// sweep. Command-line flags override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    /// Omitted entirely, SAMScore runs on the stub backend.
    #[serde(default = "default_encoders")]
    pub encoders: EncoderConfig,
    #[serde(default)]
    pub segmenter: Option<SegmenterConfig>,
    #[serde(default)]
    pub pixel_reference: PixelReference,
    #[serde(default)]
    pub distortions: Vec<DistortionGrid>,
    #[serde(default = "default_seeds")]
    pub seeds_per_degree: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub jobs: usize,
    /// Correlate every record instead of per-degree means.
    #[serde(default)]
    pub pooled: bool,
}

fn default_encoders() -> EncoderConfig {
    EncoderConfig { samscore: Some(EncoderSpec::stub()), ..Default::default() }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            metrics: default_metrics(),
            encoders: default_encoders(),
            segmenter: None,
            pixel_reference: PixelReference::Source,
            distortions: Vec::new(),
            seeds_per_degree: default_seeds(),
            master_seed: 0,
            output_dir: default_output(),
            jobs: 0,
            pooled: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: RunConfig = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every requested metric has its backend configured and every grid is
    /// within range.
    pub fn validate(&self) -> Result<()> {
        if self.metrics.is_empty() {
            return Err(Error::Config("no metrics requested".into()));
        }
        for m in &self.metrics {
            let missing = match m {
                Metric::Samscore => self.encoders.samscore.is_none(),
                Metric::Vitscore => self.encoders.vitscore.is_none(),
                Metric::Lpips => self.encoders.lpips.is_none(),
                Metric::FcnAcc | Metric::FcnIou => self.segmenter.is_none(),
                _ => false,
            };
            if missing {
                return Err(Error::Config(format!("metric {m} has no backend configured")));
            }
        }
        if self.seeds_per_degree == 0 {
            return Err(Error::Config("seeds_per_degree must be at least 1".into()));
        }
        for g in &self.distortions {
            g.validate()?;
        }
        Ok(())
    }
}
