use std::sync::Arc;

use rayon::prelude::*;

use crate::config::{DistortionGrid, Manifest, PairEntry, PixelReference, RunConfig, SegmenterConfig};
use crate::distort::derive_seed;
use crate::encoder::{build_encoder, EmbedKey, EmbeddingMap, Encoder, EncoderSpec, Role};
use crate::error::{Error, Result};
use crate::image::{load_png, ImageBuffer};
use crate::metrics::{
    confusion, fcn_scores, l2_distance, mse, psnr, ssim, LabelMap, LpipsModel, Metric, Segmenter,
};
use crate::score::samscore;

use super::records::{sort_records, SweepRecord, NO_DISTORTION, OK_STATUS};

/// Loaded backends for a set of metrics.
pub struct MetricSuite {
    metrics: Vec<Metric>,
    samscore: Option<Arc<dyn Encoder>>,
    vitscore: Option<Arc<dyn Encoder>>,
    lpips: Option<LpipsModel>,
    segmenter: Option<(Segmenter, SegmenterConfig)>,
    pixel_reference: PixelReference,
}

fn need(metrics: &[Metric], m: &[Metric]) -> bool {
    metrics.iter().any(|x| m.contains(x))
}

impl MetricSuite {
    /// Loads the backend of every requested metric. A missing backend is a
    /// configuration error; a backend that fails to load is a backend error.
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let mut metrics = cfg.metrics.clone();
        metrics.sort();
        metrics.dedup();
        let enc = |spec: &Option<EncoderSpec>| spec.as_ref().map(build_encoder).transpose();
        let samscore = if need(&metrics, &[Metric::Samscore]) { enc(&cfg.encoders.samscore)? } else { None };
        let vitscore = if need(&metrics, &[Metric::Vitscore]) { enc(&cfg.encoders.vitscore)? } else { None };
        let lpips = match (&cfg.encoders.lpips, need(&metrics, &[Metric::Lpips])) {
            (Some(EncoderSpec::OnnxModel { model_path, .. }), true) => Some(LpipsModel::load(model_path)?),
            (Some(other), true) => {
                return Err(Error::Config(format!("lpips needs an onnx model, got {other}")))
            }
            _ => None,
        };
        let segmenter = match (&cfg.segmenter, need(&metrics, &[Metric::FcnAcc, Metric::FcnIou])) {
            (Some(sc), true) => Some((Segmenter::load(&sc.model_path, sc.size)?, sc.clone())),
            _ => None,
        };
        Ok(Self { metrics, samscore, vitscore, lpips, segmenter, pixel_reference: cfg.pixel_reference })
    }

    pub fn metrics(&self) -> &[Metric] {
        &self.metrics
    }
}

/// Per-pair inputs loaded once and shared by every distortion cell.
struct PairState {
    source: ImageBuffer,
    translated: ImageBuffer,
    pixel_ref: Option<ImageBuffer>,
    labels: Option<LabelMap>,
    sam_src: Option<std::result::Result<EmbeddingMap, &'static str>>,
    vit_src: Option<std::result::Result<EmbeddingMap, &'static str>>,
}

fn status_of(pair: &str, what: &str, e: &Error) -> &'static str {
    log::warn!("{pair}: {what}: {e}");
    e.status()
}

fn load_pair(suite: &MetricSuite, p: &PairEntry) -> std::result::Result<PairState, &'static str> {
    let source = load_png(&p.source).map_err(|e| status_of(&p.id, "source", &e))?;
    let translated = load_png(&p.translated).map_err(|e| status_of(&p.id, "translated", &e))?;
    let pixel_ref = match (suite.pixel_reference, &p.translated_domain_gt) {
        (PixelReference::Source, _) => None,
        (PixelReference::GroundTruth, Some(gt)) => {
            Some(load_png(gt).map_err(|e| status_of(&p.id, "ground truth", &e))?)
        }
        (PixelReference::GroundTruth, None) => {
            let e = Error::Config("pair has no translated_domain_gt".into());
            return Err(status_of(&p.id, "pixel reference", &e));
        }
    };
    let labels = match (&suite.segmenter, &p.source_labels) {
        (Some((_, sc)), Some(path)) => Some(
            LabelMap::load_png(path, sc.num_classes, sc.ignore_id)
                .map_err(|e| status_of(&p.id, "labels", &e))?,
        ),
        _ => None,
    };
    let embed_src = |enc: &Option<Arc<dyn Encoder>>| {
        enc.as_ref().map(|enc| {
            enc.embed(&source, Some(&EmbedKey::new(p.id.clone(), Role::Src)))
                .map_err(|e| status_of(&p.id, "source embedding", &e))
        })
    };
    let sam_src = embed_src(&suite.samscore);
    let vit_src = embed_src(&suite.vitscore);
    Ok(PairState { source, translated, pixel_ref, labels, sam_src, vit_src })
}

fn cosine_metric(
    enc: &Option<Arc<dyn Encoder>>,
    src: &Option<std::result::Result<EmbeddingMap, &'static str>>,
    img: &ImageBuffer,
    key: Option<&EmbedKey>,
) -> std::result::Result<f64, CellError> {
    let (enc, src) = match (enc, src) {
        (Some(e), Some(s)) => (e, s),
        _ => return Err(CellError::Err(Error::Config("encoder not loaded".into()))),
    };
    let src = src.as_ref().map_err(|s| CellError::Status(s))?;
    let gen = enc.embed(img, key)?;
    Ok(samscore(src, &gen)?.score)
}

enum CellError {
    Status(&'static str),
    Err(Error),
}

impl From<Error> for CellError {
    fn from(e: Error) -> Self {
        CellError::Err(e)
    }
}

impl MetricSuite {
    fn score(
        &self,
        metric: Metric,
        pair_id: &str,
        st: &PairState,
        img: &ImageBuffer,
        key: Option<&EmbedKey>,
    ) -> std::result::Result<f64, CellError> {
        let reference = st.pixel_ref.as_ref().unwrap_or(&st.source);
        Ok(match metric {
            Metric::Samscore => return cosine_metric(&self.samscore, &st.sam_src, img, key),
            Metric::Vitscore => return cosine_metric(&self.vitscore, &st.vit_src, img, key),
            Metric::L2 => l2_distance(reference, img)?,
            Metric::Mse => mse(reference, img)?,
            Metric::Psnr => psnr(reference, img, reference.scale().peak())?,
            Metric::Ssim => ssim(reference, img)?,
            Metric::Lpips => {
                let m = self.lpips.as_ref().ok_or_else(|| Error::Config("lpips not loaded".into()))?;
                m.distance(&st.source, img)?
            }
            Metric::FcnAcc | Metric::FcnIou => {
                let (seg, sc) = self
                    .segmenter
                    .as_ref()
                    .ok_or_else(|| Error::Config("segmenter not loaded".into()))?;
                let gt = st.labels.as_ref().ok_or_else(|| {
                    Error::Config(format!("pair {pair_id} has no source_labels"))
                })?;
                let pred = seg.segment(img, sc.ignore_id)?;
                let (h, w) = gt.dims();
                let s = fcn_scores(&confusion(gt, &pred.resize_nearest(h, w))?)?;
                if metric == Metric::FcnAcc { s.per_pixel_acc } else { s.class_iou }
            }
        })
    }

    fn cell_records(
        &self,
        pair_id: &str,
        st: std::result::Result<&PairState, &'static str>,
        distortion: &str,
        degree: f64,
        seed: u64,
        image: impl FnOnce(&PairState) -> Result<ImageBuffer>,
        key: Option<EmbedKey>,
    ) -> Vec<SweepRecord> {
        let make = |metric: Metric, outcome: std::result::Result<f64, &'static str>| SweepRecord {
            pair_id: pair_id.to_string(),
            metric: metric.name().to_string(),
            distortion: distortion.to_string(),
            degree,
            seed,
            status: outcome.map_or_else(|s| s.to_string(), |_| OK_STATUS.to_string()),
            value: outcome.ok(),
        };
        let distorted = st.and_then(|st| {
            image(st).map(|img| (st, img)).map_err(|e| status_of(pair_id, distortion, &e))
        });
        self.metrics
            .iter()
            .map(|&m| {
                let outcome = distorted.as_ref().map_err(|s| *s).and_then(|(st, img)| {
                    self.score(m, pair_id, st, img, key.as_ref()).map_err(|e| match e {
                        CellError::Status(s) => s,
                        CellError::Err(e) => status_of(pair_id, m.name(), &e),
                    })
                });
                make(m, outcome)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub seeds_per_degree: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

impl From<&RunConfig> for SweepOptions {
    fn from(cfg: &RunConfig) -> Self {
        Self { seeds_per_degree: cfg.seeds_per_degree, master_seed: cfg.master_seed, jobs: cfg.jobs }
    }
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn load_all(suite: &MetricSuite, manifest: &Manifest) -> Vec<std::result::Result<PairState, &'static str>> {
    manifest.pairs.par_iter().map(|p| load_pair(suite, p)).collect()
}

/// Scores every pair undistorted: one record per (pair, metric), sorted.
pub fn run_batch(manifest: &Manifest, suite: &MetricSuite, jobs: usize) -> Result<Vec<SweepRecord>> {
    with_pool(jobs, || {
        let states = load_all(suite, manifest);
        let mut out: Vec<SweepRecord> = manifest
            .pairs
            .par_iter()
            .zip(&states)
            .flat_map_iter(|(p, st)| {
                suite.cell_records(
                    &p.id,
                    st.as_ref().map_err(|s| *s),
                    NO_DISTORTION,
                    0.0,
                    0,
                    |st| Ok(st.translated.clone()),
                    Some(EmbedKey::new(p.id.clone(), Role::Gen)),
                )
            })
            .collect();
        sort_records(&mut out);
        out
    })
}

/// Distorts each translated image over every grid degree and scores it
/// against the undistorted source with every metric. Each cell's seed
/// comes from [`derive_seed`] with the master seed offset by the repetition
/// index, so results do not depend on `jobs` or scheduling. Failures
/// become per-record statuses. Records are returned sorted.
pub fn run_sweep(
    manifest: &Manifest,
    suite: &MetricSuite,
    grids: &[DistortionGrid],
    opts: &SweepOptions,
) -> Result<Vec<SweepRecord>> {
    for g in grids {
        g.validate()?;
    }
    if opts.seeds_per_degree == 0 {
        return Err(Error::Config("seeds_per_degree must be at least 1".into()));
    }
    let mut cells = Vec::new();
    for (pi, _) in manifest.pairs.iter().enumerate() {
        for g in grids {
            for (di, d) in g.resolved_degrees().into_iter().enumerate() {
                for rep in 0..opts.seeds_per_degree {
                    cells.push((pi, g, di, d, rep as u64));
                }
            }
        }
    }
    with_pool(opts.jobs, || {
        let states = load_all(suite, manifest);
        let mut out: Vec<SweepRecord> = cells
            .par_iter()
            .flat_map_iter(|&(pi, g, di, degree, rep)| {
                let p = &manifest.pairs[pi];
                let seed = derive_seed(opts.master_seed.wrapping_add(rep), &p.id, g.kind, di);
                let spec = g.spec(degree, seed);
                // only the undistorted translation has a precomputed embedding
                let key = (degree == 0.0).then(|| EmbedKey::new(p.id.clone(), Role::Gen));
                suite.cell_records(
                    &p.id,
                    states[pi].as_ref().map_err(|s| *s),
                    g.kind.name(),
                    degree,
                    seed,
                    |st| spec.apply(&st.translated),
                    key,
                )
            })
            .collect();
        sort_records(&mut out);
        out
    })
}
