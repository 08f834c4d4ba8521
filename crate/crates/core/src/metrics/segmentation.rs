//! FCNScore: per-pixel accuracy and class IoU between a reference label map
//! and the segmentation of a translated image.

use std::path::Path;

use serde::Serialize;

use crate::encoder::ModelMetadata;
use crate::error::{Error, Result};
use crate::image::{load_png, resample_values, save_png, ImageBuffer};
use crate::onnx::OnnxSession;
use crate::tensor::TensorF32;

/// Per-pixel class ids with an optional ignore id excluded from scoring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    labels: Vec<u16>,
    num_classes: usize,
    ignore_id: Option<u16>,
}

impl LabelMap {
    pub fn new(
        height: usize,
        width: usize,
        labels: Vec<u16>,
        num_classes: usize,
        ignore_id: Option<u16>,
    ) -> Result<Self> {
        if labels.len() != height * width {
            return Err(Error::shape(height * width, labels.len()));
        }
        if let Some(&bad) = labels
            .iter()
            .find(|&&l| l as usize >= num_classes && Some(l) != ignore_id)
        {
            return Err(Error::InvalidArgument(format!(
                "label {bad} outside {num_classes} classes"
            )));
        }
        Ok(Self { height, width, labels, num_classes, ignore_id })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn ignore_id(&self) -> Option<u16> {
        self.ignore_id
    }

    /// Reads a single-channel PNG whose pixel values are class ids.
    pub fn load_png(path: impl AsRef<Path>, num_classes: usize, ignore_id: Option<u16>) -> Result<Self> {
        let img = load_png(path)?;
        if img.channels() != 1 {
            return Err(Error::UnsupportedPixelFormat("label maps must be single-channel".into()));
        }
        let labels = img.as_u8().expect("png decodes to u8").iter().map(|&v| v as u16).collect();
        Self::new(img.height(), img.width(), labels, num_classes, ignore_id)
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        if let Some(&l) = self.labels.iter().find(|&&l| l > 255) {
            return Err(Error::InvalidArgument(format!("label {l} does not fit in 8 bits")));
        }
        let data = self.labels.iter().map(|&l| l as u8).collect();
        save_png(&ImageBuffer::from_u8(self.height, self.width, 1, data)?, path)
    }

    /// Nearest-neighbour resize with half-pixel centers.
    pub fn resize_nearest(&self, out_h: usize, out_w: usize) -> LabelMap {
        let pick = |o: usize, out: usize, inp: usize| (((o as f64 + 0.5) * inp as f64 / out as f64) as usize).min(inp - 1);
        let mut labels = Vec::with_capacity(out_h * out_w);
        for y in 0..out_h {
            let sy = pick(y, out_h, self.height);
            for x in 0..out_w {
                labels.push(self.labels[sy * self.width + pick(x, out_w, self.width)]);
            }
        }
        LabelMap { height: out_h, width: out_w, labels, ..self.clone() }
    }
}

/// Rows are reference classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn from_counts(num_classes: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != num_classes * num_classes {
            return Err(Error::shape(num_classes * num_classes, counts.len()));
        }
        Ok(Self { num_classes, counts })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, reference: usize, predicted: usize) -> u64 {
        self.counts[reference * self.num_classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        (0..self.num_classes).map(|p| self.get(c, p)).sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        (0..self.num_classes).map(|r| self.get(r, c)).sum()
    }
}

/// Counts `(reference, predicted)` pairs, skipping pixels that carry the
/// ignore id on either side.
pub fn confusion(gt: &LabelMap, pred: &LabelMap) -> Result<ConfusionMatrix> {
    if gt.dims() != pred.dims() {
        return Err(Error::shape(gt.dims(), pred.dims()));
    }
    if gt.num_classes != pred.num_classes {
        return Err(Error::ClassCountMismatch(gt.num_classes, pred.num_classes));
    }
    let k = gt.num_classes;
    let mut counts = vec![0u64; k * k];
    for (&r, &p) in gt.labels.iter().zip(&pred.labels) {
        if Some(r) == gt.ignore_id || Some(p) == pred.ignore_id {
            continue;
        }
        counts[r as usize * k + p as usize] += 1;
    }
    Ok(ConfusionMatrix { num_classes: k, counts })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FcnScores {
    pub per_pixel_acc: f64,
    pub class_iou: f64,
    /// `None` for classes absent from both reference and prediction.
    pub per_class_iou: Vec<Option<f64>>,
}

/// Accuracy is `trace / total`; class IoU averages over classes that occur
/// in the reference or the prediction.
pub fn fcn_scores(cm: &ConfusionMatrix) -> Result<FcnScores> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let k = cm.num_classes;
    let trace: u64 = (0..k).map(|c| cm.get(c, c)).sum();
    let per_class_iou: Vec<Option<f64>> = (0..k)
        .map(|c| {
            let tp = cm.get(c, c);
            let union = cm.row_sum(c) + cm.col_sum(c) - tp;
            (union > 0).then(|| tp as f64 / union as f64)
        })
        .collect();
    let present: Vec<f64> = per_class_iou.iter().flatten().copied().collect();
    Ok(FcnScores {
        per_pixel_acc: trace as f64 / total as f64,
        class_iou: present.iter().sum::<f64>() / present.len() as f64,
        per_class_iou,
    })
}

/// Exported segmentation network: `image [1,3,Hs,Ws]` in, `logits
/// [1,K,Hs,Ws]` out. Labels are the per-pixel argmax.
pub struct Segmenter {
    session: OnnxSession,
    size: (usize, usize),
    mean: [f64; 3],
    std: [f64; 3],
    input: String,
    output: String,
}

impl Segmenter {
    /// ImageNet statistics in pixel units, overridable through the model's
    /// `<model>.json` sidecar.
    pub fn load(model_path: &Path, size: (usize, usize)) -> Result<Self> {
        let meta = ModelMetadata::load_sidecar(model_path)?.unwrap_or_default();
        let base = crate::encoder::Preprocess {
            size: size.0,
            mean: [123.675, 116.28, 103.53],
            std: [58.395, 57.12, 57.375],
        };
        let pp = meta.apply_to(&base)?;
        let size = match meta.input_size {
            Some(s) => (s, s),
            None => size,
        };
        let input = meta.input_names.first().cloned().unwrap_or_else(|| "image".into());
        let output = meta.output_names.first().cloned().unwrap_or_else(|| "logits".into());
        let session = OnnxSession::load(model_path, &[(input.as_str(), vec![1, 3, size.0, size.1])])?;
        Ok(Self { session, size, mean: pp.mean, std: pp.std, input, output })
    }

    pub fn segment(&self, img: &ImageBuffer, ignore_id: Option<u16>) -> Result<LabelMap> {
        let (h, w) = self.size;
        let rgb = img.to_rgb();
        let to_px = 255.0 / rgb.scale().peak();
        let values = resample_values(&rgb, h, w);
        let plane = h * w;
        let mut x = vec![0.0f32; 3 * plane];
        for (i, px) in values.chunks_exact(3).enumerate() {
            for c in 0..3 {
                x[c * plane + i] = ((px[c] * to_px - self.mean[c]) / self.std[c]) as f32;
            }
        }
        let logits = self
            .session
            .run_one(vec![(self.input.as_str(), TensorF32::new(vec![1, 3, h, w], x)?)], &self.output)?;
        argmax_labels(&logits, ignore_id)
    }
}

/// Argmax over the class axis of `[1, K, H, W]` logits. Ties go to the
/// lowest class id.
pub fn argmax_labels(logits: &TensorF32, ignore_id: Option<u16>) -> Result<LabelMap> {
    let &[1, k, h, w] = logits.shape() else {
        return Err(Error::shape("[1, K, H, W]", logits.shape()));
    };
    let plane = h * w;
    let d = logits.data();
    let labels = (0..plane)
        .map(|i| {
            let mut best = 0;
            for c in 1..k {
                if d[c * plane + i] > d[best * plane + i] {
                    best = c;
                }
            }
            best as u16
        })
        .collect();
    LabelMap::new(h, w, labels, k, ignore_id)
}
