//! Baseline similarity metrics and the metric registry used by sweeps.

mod learned;
mod pixel;
mod segmentation;
mod ssim;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use learned::{lpips, vitscore, LpipsModel, LPIPS_SIZE};
pub use pixel::{l2_distance, mse, psnr};
pub use segmentation::{
    argmax_labels, confusion, fcn_scores, ConfusionMatrix, FcnScores, LabelMap, Segmenter,
};
pub use ssim::{gaussian_taps, ssim};

use crate::error::Error;

/// Every metric a sweep can record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Samscore,
    L2,
    Mse,
    Psnr,
    Ssim,
    Lpips,
    Vitscore,
    FcnAcc,
    FcnIou,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::Samscore,
        Metric::L2,
        Metric::Mse,
        Metric::Psnr,
        Metric::Ssim,
        Metric::Lpips,
        Metric::Vitscore,
        Metric::FcnAcc,
        Metric::FcnIou,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Samscore => "samscore",
            Metric::L2 => "l2",
            Metric::Mse => "mse",
            Metric::Psnr => "psnr",
            Metric::Ssim => "ssim",
            Metric::Lpips => "lpips",
            Metric::Vitscore => "vitscore",
            Metric::FcnAcc => "fcn_acc",
            Metric::FcnIou => "fcn_iou",
        }
    }

    /// Whether larger values mean more similar.
    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::L2 | Metric::Mse | Metric::Lpips)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric {s:?}")))
    }
}
