//! Piecewise affine warp over a regular control grid.
//!
//! Control points sit on `rows x cols` lines spanning the corner pixel
//! centers, `y_i = i (H-1)/(rows-1)` and `x_j = j (W-1)/(cols-1)`, border
//! points included. Every point is displaced by an isotropic Gaussian with
//! standard deviation `degree * min(H, W)`. Each grid cell is split along its
//! top-left to bottom-right diagonal and the two triangles are mapped
//! affinely onto their displaced counterparts. Output pixels are pulled from
//! the source at the mapped position with clamped bilinear sampling.

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

use super::RngStream;

fn check_grid(img: &ImageBuffer, rows: usize, cols: usize) -> Result<()> {
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidArgument(format!("warp grid {rows}x{cols} needs at least 2x2 points")));
    }
    if img.height() < rows || img.width() < cols {
        return Err(Error::ImageTooSmall(format!(
            "{}x{} image cannot hold a {rows}x{cols} control grid",
            img.height(),
            img.width()
        )));
    }
    Ok(())
}

/// Displacements `(dx, dy)` of the control points in row-major order.
///
/// Both components of a point come from one Box–Muller pair, so scaling
/// `degree` scales every displacement by the same factor.
pub fn control_displacements(
    height: usize,
    width: usize,
    degree: f64,
    seed: u64,
    rows: usize,
    cols: usize,
) -> Vec<(f64, f64)> {
    let sigma = degree * height.min(width) as f64;
    let mut rng = RngStream::new(seed);
    (0..rows * cols)
        .map(|_| {
            let dx = rng.normal();
            let dy = rng.normal();
            (sigma * dx, sigma * dy)
        })
        .collect()
}

fn bilinear(img: &ImageBuffer, sy: f64, sx: f64, out: &mut Vec<f64>) {
    let (h, w) = (img.height(), img.width());
    let sy = sy.clamp(0.0, (h - 1) as f64);
    let sx = sx.clamp(0.0, (w - 1) as f64);
    let (y0, x0) = (sy.floor() as usize, sx.floor() as usize);
    let (y1, x1) = ((y0 + 1).min(h - 1), (x0 + 1).min(w - 1));
    let (fy, fx) = (sy - y0 as f64, sx - x0 as f64);
    for c in 0..img.channels() {
        let top = img.at(y0, x0, c) * (1.0 - fx) + img.at(y0, x1, c) * fx;
        let bottom = img.at(y1, x0, c) * (1.0 - fx) + img.at(y1, x1, c) * fx;
        out.push(top * (1.0 - fy) + bottom * fy);
    }
}

/// Cell index and fractional offset of `p` along an axis of `len` pixels cut
/// into `cells` equal spans.
#[inline]
fn locate(p: usize, len: usize, cells: usize) -> (usize, f64) {
    let span = (len - 1) as f64 / cells as f64;
    let t = p as f64 / span;
    let i = (t.floor() as usize).min(cells - 1);
    (i, t - i as f64)
}

/// Warps `img` with explicit control displacements (row-major, `rows * cols`).
pub fn warp_with_displacements(
    img: &ImageBuffer,
    disp: &[(f64, f64)],
    rows: usize,
    cols: usize,
) -> Result<ImageBuffer> {
    check_grid(img, rows, cols)?;
    if disp.len() != rows * cols {
        return Err(Error::LengthMismatch(rows * cols, disp.len()));
    }
    let (h, w) = (img.height(), img.width());
    let mut values = Vec::with_capacity(img.len());
    for y in 0..h {
        let (i, v) = locate(y, h, rows - 1);
        for x in 0..w {
            let (j, u) = locate(x, w, cols - 1);
            let tl = disp[i * cols + j];
            let tr = disp[i * cols + j + 1];
            let bl = disp[(i + 1) * cols + j];
            let br = disp[(i + 1) * cols + j + 1];
            // the regular grid maps affinely onto itself, so only the
            // displacement needs interpolating
            let (a, b, c, pb, pc) = if u >= v {
                (1.0 - u, u - v, v, tr, br)
            } else {
                (1.0 - v, u, v - u, br, bl)
            };
            let dx = a * tl.0 + b * pb.0 + c * pc.0;
            let dy = a * tl.1 + b * pb.1 + c * pc.1;
            bilinear(img, y as f64 + dy, x as f64 + dx, &mut values);
        }
    }
    Ok(img.with_values(values.into_iter()))
}

/// Seeded piecewise affine warp. Degree 0 returns the input unchanged.
pub fn piecewise_affine(
    img: &ImageBuffer,
    degree: f64,
    seed: u64,
    rows: usize,
    cols: usize,
) -> Result<ImageBuffer> {
    check_grid(img, rows, cols)?;
    if degree == 0.0 {
        return Ok(img.clone());
    }
    let disp = control_displacements(img.height(), img.width(), degree, seed, rows, cols);
    warp_with_displacements(img, &disp, rows, cols)
}
