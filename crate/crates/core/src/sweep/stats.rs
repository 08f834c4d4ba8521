use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::records::{round6, SweepRecord, OK_STATUS};

/// Pearson correlation with single-pass co-moment updates, accumulated in
/// f64.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(Error::InsufficientDegrees(x.len()));
    }
    let (mut mx, mut my) = (0.0f64, 0.0f64);
    let (mut sxx, mut syy, mut sxy) = (0.0f64, 0.0f64, 0.0f64);
    for (k, (&a, &b)) in x.iter().zip(y).enumerate() {
        let n = (k + 1) as f64;
        let dx = a - mx;
        let dy = b - my;
        mx += dx / n;
        my += dy / n;
        sxx += dx * (a - mx);
        syy += dy * (b - my);
        sxy += dx * (b - my);
    }
    if !(sxx > 0.0) || !(syy > 0.0) {
        return Err(Error::DegenerateSeries);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// `100 (v_i - v_0) / |v_0|`; the sign of the change survives for metrics
/// whose baseline is negative.
pub fn percent_change(series: &[f64]) -> Result<Vec<f64>> {
    let v0 = *series
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty series".into()))?;
    if v0 == 0.0 || !v0.is_finite() {
        return Err(Error::ZeroBaseline);
    }
    Ok(series.iter().map(|v| 100.0 * (v - v0) / v0.abs()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationStatus {
    Ok,
    DegenerateSeries,
    InsufficientDegrees,
}

/// Correlation between distortion degree and a metric for one
/// (metric, distortion) group. `r` and `abs_r` are absent unless
/// `status` is `ok`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub metric: String,
    pub distortion: String,
    pub abs_r: Option<f64>,
    pub r: Option<f64>,
    pub n: usize,
    /// Infinite values (PSNR of identical images) left out of the means.
    pub excluded: usize,
    /// Records whose status was not ok.
    pub failed: usize,
    pub pooled: bool,
    pub status: CorrelationStatus,
}

impl CorrelationReport {
    /// Copy with `r` and `abs_r` rounded to six decimals for output.
    pub fn rounded(&self) -> Self {
        Self { r: self.r.map(round6), abs_r: self.abs_r.map(round6), ..self.clone() }
    }
}

/// Pretty JSON array of rounded reports, newline-terminated.
pub fn reports_json<T: Serialize>(reports: &[T]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize") + "\n"
}

/// Per-degree mean of the finite values in `records`, in ascending degree
/// order, plus the count of infinite values skipped.
pub fn degree_means(records: &[&SweepRecord]) -> (Vec<(f64, f64)>, usize) {
    let mut sums: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    let mut excluded = 0;
    for r in records {
        let Some(v) = r.value.filter(|_| r.status == OK_STATUS) else { continue };
        if !v.is_finite() {
            excluded += 1;
            continue;
        }
        let e = sums.entry(degree_key(r.degree)).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    let means = sums
        .into_iter()
        .map(|(k, (s, n))| (f64::from_bits(k), s / n as f64))
        .collect();
    (means, excluded)
}

// non-negative floats order the same as their bit patterns
fn degree_key(d: f64) -> u64 {
    debug_assert!(d >= 0.0);
    (d + 0.0).to_bits()
}

/// Groups records by (metric, distortion) and correlates degree with the
/// metric value. By default each degree contributes its mean; `pooled`
/// correlates every individual record instead. Groups that cannot be
/// correlated are reported with a status rather than failing the run. The
/// output is sorted and does not depend on record order.
pub fn correlate(records: &[SweepRecord], pooled: bool) -> Vec<CorrelationReport> {
    let mut groups: BTreeMap<(&str, &str), Vec<&SweepRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((&r.metric, &r.distortion)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((metric, distortion), mut group)| {
            let failed = group.iter().filter(|r| r.status != OK_STATUS).count();
            let (means, excluded) = degree_means(&group);
            let distinct = means.len();
            let (x, y): (Vec<f64>, Vec<f64>) = if pooled {
                // sort so the floating-point sums see one fixed order
                group.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
                group
                    .iter()
                    .filter(|r| r.status == OK_STATUS)
                    .filter_map(|r| r.value.filter(|v| v.is_finite()).map(|v| (r.degree, v)))
                    .unzip()
            } else {
                means.into_iter().unzip()
            };
            let n = x.len();
            let (status, r) = if distinct < 3 {
                (CorrelationStatus::InsufficientDegrees, None)
            } else {
                match pearson(&x, &y) {
                    Ok(r) => (CorrelationStatus::Ok, Some(r)),
                    Err(_) => (CorrelationStatus::DegenerateSeries, None),
                }
            };
            CorrelationReport {
                metric: metric.to_string(),
                distortion: distortion.to_string(),
                abs_r: r.map(f64::abs),
                r,
                n,
                excluded,
                failed,
                pooled,
                status,
            }
        })
        .collect()
}
