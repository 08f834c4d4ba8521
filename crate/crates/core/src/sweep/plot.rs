//! Static SVG line plots of percent-change series.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const WIDTH: f64 = 720.0;
pub const HEIGHT: f64 = 420.0;
pub const MARGIN_LEFT: f64 = 70.0;
pub const MARGIN_RIGHT: f64 = 200.0;
pub const MARGIN_TOP: f64 = 40.0;
pub const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] =
    ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub higher_is_better: bool,
    pub values: Vec<f64>,
}

/// Data ranges mapped onto the plot area. The y range always contains 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axes {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Axes {
    pub fn fit(degrees: &[f64], series: &[Series]) -> Self {
        let (mut x_min, mut x_max) = minmax(degrees.iter().copied());
        if x_min == x_max {
            x_min -= 1.0;
            x_max += 1.0;
        }
        let (y_min, y_max) = minmax(series.iter().flat_map(|s| s.values.iter().copied()));
        let (mut y_min, mut y_max) = (y_min.min(0.0), y_max.max(0.0));
        if y_min == y_max {
            y_min -= 1.0;
            y_max += 1.0;
        }
        Self { x_min, x_max, y_min, y_max }
    }

    pub fn px(&self, x: f64) -> f64 {
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        MARGIN_LEFT + (x - self.x_min) / (self.x_max - self.x_min) * plot_w
    }

    pub fn py(&self, y: f64) -> f64 {
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        MARGIN_TOP + (self.y_max - y) / (self.y_max - self.y_min) * plot_h
    }
}

fn minmax(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.filter(|v| v.is_finite())
        .fold(None, |acc: Option<(f64, f64)>, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
        .unwrap_or((0.0, 0.0))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the plot as an SVG document. Every coordinate is printed with
/// two decimals, so equal inputs give identical bytes.
pub fn lineplot_svg(title: &str, x_label: &str, degrees: &[f64], series: &[Series]) -> Result<String> {
    if let Some(s) = series.iter().find(|s| s.values.len() != degrees.len()) {
        return Err(Error::LengthMismatch(degrees.len(), s.values.len()));
    }
    let ax = Axes::fit(degrees, series);
    let (left, right) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (top, bottom) = (MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    let mut s = String::new();
    let w = &mut s;
    // writing into a String cannot fail
    let _ = writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH:.0}" height="{HEIGHT:.0}" viewBox="0 0 {WIDTH:.0} {HEIGHT:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH:.0}" height="{HEIGHT:.0}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="24.00" text-anchor="middle" font-size="14">{}</text>"#,
        (left + right) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        w,
        r#"<path d="M{left:.2},{top:.2} L{left:.2},{bottom:.2} L{right:.2},{bottom:.2}" fill="none" stroke="black"/>"#
    );
    let zero = ax.py(0.0);
    let _ = writeln!(
        w,
        r##"<line x1="{left:.2}" y1="{zero:.2}" x2="{right:.2}" y2="{zero:.2}" stroke="#999999" stroke-dasharray="4 3"/>"##
    );
    for &d in degrees {
        let x = ax.px(d);
        let _ = writeln!(
            w,
            r#"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            bottom + 4.0
        );
        let _ = writeln!(
            w,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 18.0,
            trim_number(d)
        );
    }
    for (v, label) in [(ax.y_min, ax.y_min), (0.0, 0.0), (ax.y_max, ax.y_max)] {
        let y = ax.py(v);
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.1}%</text>"#,
            left - 6.0,
            y + 4.0,
            label
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = degrees
            .iter()
            .zip(&ser.values)
            .filter(|(_, v)| v.is_finite())
            .map(|(&d, &v)| format!("{:.2},{:.2}", ax.px(d), ax.py(v)))
            .collect();
        let _ = writeln!(w, "<!-- series: {} -->", escape(&ser.label).replace("--", "- -"));
        let _ = writeln!(
            w,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            points.join(" ")
        );
        let ly = top + 10.0 + 20.0 * i as f64;
        let _ = writeln!(
            w,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            right + 15.0,
            right + 35.0
        );
        let tag = if ser.higher_is_better { "higher is better" } else { "lower is better" };
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}">{} ({tag})</text>"#,
            right + 40.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn trim_number(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" { "0".into() } else { s.to_string() }
}

pub fn render_lineplot(
    title: &str,
    x_label: &str,
    degrees: &[f64],
    series: &[Series],
    out_path: &Path,
) -> Result<()> {
    let svg = lineplot_svg(title, x_label, degrees, series)?;
    std::fs::write(out_path, svg).map_err(|e| Error::io(out_path, e))
}
