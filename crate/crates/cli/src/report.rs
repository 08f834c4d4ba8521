//! `report`: percent-change line plots and a correlation summary across
//! one or more records files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;

use transcore::metrics::Metric;
use transcore::sweep::{
    correlate, degree_means, percent_change, read_records, render_lineplot, reports_json,
    CorrelationReport, Series, SweepRecord, NO_DISTORTION,
};
use transcore::{Error, Result};

use crate::file_stem;

#[derive(Serialize)]
struct TaskReport {
    task: String,
    #[serde(flatten)]
    report: CorrelationReport,
}

fn higher_is_better(metric: &str) -> bool {
    metric.parse::<Metric>().map(Metric::higher_is_better).unwrap_or(true)
}

/// Percent-change series per metric for one distortion, on the union of
/// degrees. Metrics missing a degree, or with a zero or infinite baseline,
/// are left out with a warning.
fn series_for(records: &[&SweepRecord]) -> (Vec<f64>, Vec<Series>) {
    let mut by_metric: BTreeMap<&str, Vec<&SweepRecord>> = BTreeMap::new();
    for r in records {
        by_metric.entry(&r.metric).or_default().push(r);
    }
    let mut axis: Vec<f64> = records.iter().map(|r| r.degree).collect();
    axis.sort_by(f64::total_cmp);
    axis.dedup();
    let mut series = Vec::new();
    for (metric, recs) in by_metric {
        let (means, _) = degree_means(&recs);
        if means.len() != axis.len() || means.iter().zip(&axis).any(|((d, _), a)| d != a) {
            warn!("{metric}: not every degree has a finite mean; left out of the plot");
            continue;
        }
        let values: Vec<f64> = means.iter().map(|&(_, m)| m).collect();
        match percent_change(&values) {
            Ok(values) => series.push(Series {
                label: metric.to_string(),
                higher_is_better: higher_is_better(metric),
                values,
            }),
            Err(e) => warn!("{metric}: {e}; left out of the plot"),
        }
    }
    (axis, series)
}

pub fn run(files: &[PathBuf], out_dir: &Path, pooled: bool) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut summary = Vec::new();
    for file in files {
        let task = file_stem(file);
        let records = read_records(file)?;
        let mut by_distortion: BTreeMap<&str, Vec<&SweepRecord>> = BTreeMap::new();
        for r in records.iter().filter(|r| r.distortion != NO_DISTORTION) {
            by_distortion.entry(&r.distortion).or_default().push(r);
        }
        for (distortion, recs) in &by_distortion {
            let (axis, series) = series_for(recs);
            if series.is_empty() {
                warn!("{task}/{distortion}: nothing to plot");
                continue;
            }
            let path = out_dir.join(format!("{task}_{distortion}.svg"));
            render_lineplot(
                &format!("{task}: {distortion}"),
                "degree",
                &axis,
                &series,
                &path,
            )?;
            info!("wrote {}", path.display());
        }
        summary.extend(correlate(&records, pooled).into_iter().map(|r| TaskReport {
            task: task.clone(),
            report: r.rounded(),
        }));
    }
    let path = out_dir.join("report.json");
    std::fs::write(&path, reports_json(&summary)).map_err(|e| Error::io(&path, e))
}
