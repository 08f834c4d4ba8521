//! Raster images: the in-memory buffer, PNG codec and bilinear resampling.

use std::io::Cursor;
use std::path::Path;

use crate::error::{Error, Result};

/// Value range tag carried by an [`ImageBuffer`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// 8-bit integers in `[0, 255]`.
    U8,
    /// Floats in `[0, 1]`.
    Unit,
}

impl Scale {
    /// Largest representable value in native units.
    pub fn peak(self) -> f64 {
        match self {
            Scale::U8 => 255.0,
            Scale::Unit => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pixels {
    U8(Vec<u8>),
    F32(Vec<f32>),
}

/// Row-major, channel-interleaved image with 1 or 3 channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    height: usize,
    width: usize,
    channels: usize,
    pixels: Pixels,
}

/// Rounds half-up and clamps to the 8-bit range.
#[inline]
pub fn quantize_u8(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

fn check_dims(height: usize, width: usize, channels: usize, len: usize) -> Result<()> {
    if channels != 1 && channels != 3 {
        return Err(Error::UnsupportedPixelFormat(format!("{channels} channels")));
    }
    if height == 0 || width == 0 {
        return Err(Error::InvalidArgument(format!("empty image {height}x{width}")));
    }
    if height * width * channels != len {
        return Err(Error::shape(height * width * channels, len));
    }
    Ok(())
}

impl ImageBuffer {
    pub fn from_u8(height: usize, width: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(height, width, channels, data.len())?;
        Ok(Self { height, width, channels, pixels: Pixels::U8(data) })
    }

    pub fn from_f32(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(height, width, channels, data.len())?;
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("float pixel {v} outside [0,1]")));
        }
        Ok(Self { height, width, channels, pixels: Pixels::F32(data) })
    }

    /// Builds an 8-bit image from a per-pixel function returning native values.
    pub fn from_fn_u8(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> u8,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(y, x, c));
                }
            }
        }
        Self::from_u8(height, width, channels, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn pixels(&self) -> &Pixels {
        &self.pixels
    }

    pub fn scale(&self) -> Scale {
        match self.pixels {
            Pixels::U8(_) => Scale::U8,
            Pixels::F32(_) => Scale::Unit,
        }
    }

    pub fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Value at flat index in native units.
    #[inline]
    pub fn value(&self, idx: usize) -> f64 {
        match &self.pixels {
            Pixels::U8(d) => d[idx] as f64,
            Pixels::F32(d) => d[idx] as f64,
        }
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize, c: usize) -> f64 {
        self.value((y * self.width + x) * self.channels + c)
    }

    pub fn as_u8(&self) -> Option<&[u8]> {
        match &self.pixels {
            Pixels::U8(d) => Some(d),
            Pixels::F32(_) => None,
        }
    }

    /// Converts to the unit-float representation (lossless for 8-bit inputs).
    pub fn to_unit(&self) -> ImageBuffer {
        let data = match &self.pixels {
            Pixels::U8(d) => d.iter().map(|&v| v as f32 / 255.0).collect(),
            Pixels::F32(d) => d.clone(),
        };
        self.rebuild(Pixels::F32(data))
    }

    /// Converts to 8-bit, rounding half-up.
    pub fn to_u8(&self) -> ImageBuffer {
        let data = match &self.pixels {
            Pixels::U8(d) => d.clone(),
            Pixels::F32(d) => d.iter().map(|&v| quantize_u8(v as f64 * 255.0)).collect(),
        };
        self.rebuild(Pixels::U8(data))
    }

    /// Replicates a single channel to RGB; 3-channel images are returned as-is.
    pub fn to_rgb(&self) -> ImageBuffer {
        if self.channels == 3 {
            return self.clone();
        }
        let pixels = match &self.pixels {
            Pixels::U8(d) => Pixels::U8(d.iter().flat_map(|&v| [v, v, v]).collect()),
            Pixels::F32(d) => Pixels::F32(d.iter().flat_map(|&v| [v, v, v]).collect()),
        };
        Self { height: self.height, width: self.width, channels: 3, pixels }
    }

    /// Rebuilds an image of the same shape and scale from native-unit values.
    /// 8-bit targets are rounded half-up; float targets are clamped to `[0, 1]`.
    pub(crate) fn with_values(&self, values: impl Iterator<Item = f64>) -> ImageBuffer {
        let pixels = match self.scale() {
            Scale::U8 => Pixels::U8(values.map(quantize_u8).collect()),
            Scale::Unit => Pixels::F32(values.map(|v| v.clamp(0.0, 1.0) as f32).collect()),
        };
        debug_assert_eq!(
            match &pixels {
                Pixels::U8(d) => d.len(),
                Pixels::F32(d) => d.len(),
            },
            self.len()
        );
        self.rebuild(pixels)
    }

    fn rebuild(&self, pixels: Pixels) -> ImageBuffer {
        Self { height: self.height, width: self.width, channels: self.channels, pixels }
    }
}

fn malformed(e: impl std::fmt::Display) -> Error {
    Error::MalformedFile(format!("png: {e}"))
}

/// Decodes an 8-bit grayscale or RGB PNG. Alpha is dropped; palettes without
/// transparency are expanded to RGB.
pub fn decode_png(bytes: &[u8]) -> Result<ImageBuffer> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    let info = decoder.read_header_info().map_err(malformed)?;
    let (color, depth) = (info.color_type, info.bit_depth);
    if depth == png::BitDepth::Sixteen {
        return Err(Error::UnsupportedPixelFormat("16-bit samples".into()));
    }
    if color == png::ColorType::Indexed || depth != png::BitDepth::Eight {
        decoder.set_transformations(png::Transformations::EXPAND);
    }
    let mut reader = decoder.read_info().map_err(malformed)?;
    if color == png::ColorType::Indexed && reader.info().trns.is_some() {
        return Err(Error::UnsupportedPixelFormat("palette with transparency".into()));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| malformed("image too large"))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(malformed)?;
    if frame.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedPixelFormat(format!("{:?} samples", frame.bit_depth)));
    }
    let (h, w) = (frame.height as usize, frame.width as usize);
    let stride = frame.line_size;
    let (src_ch, keep) = match frame.color_type {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        png::ColorType::Indexed => {
            return Err(Error::UnsupportedPixelFormat("unexpanded palette".into()))
        }
    };
    let mut data = Vec::with_capacity(h * w * keep);
    for row in buf.chunks(stride).take(h) {
        for px in row[..w * src_ch].chunks_exact(src_ch) {
            data.extend_from_slice(&px[..keep]);
        }
    }
    ImageBuffer::from_u8(h, w, keep, data)
}

/// Encodes as an 8-bit PNG. Float images are quantized half-up first.
pub fn encode_png(img: &ImageBuffer) -> Result<Vec<u8>> {
    let img8 = img.to_u8();
    let data = img8.as_u8().expect("quantized");
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width as u32, img.height as u32);
        enc.set_color(if img.channels == 1 {
            png::ColorType::Grayscale
        } else {
            png::ColorType::Rgb
        });
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(malformed)?;
        writer.write_image_data(data).map_err(malformed)?;
        writer.finish().map_err(malformed)?;
    }
    Ok(out)
}

pub fn load_png(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_png(&bytes)
}

pub fn save_png(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_png(img)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Source coordinate and blend weight for one output index under the
/// half-pixel-center convention.
#[inline]
fn sample_axis(out_idx: usize, in_len: usize, out_len: usize) -> (usize, usize, f64) {
    let ratio = in_len as f64 / out_len as f64;
    let src = ((out_idx as f64 + 0.5) * ratio - 0.5).clamp(0.0, (in_len - 1) as f64);
    let lo = src.floor() as usize;
    let hi = (lo + 1).min(in_len - 1);
    (lo, hi, src - lo as f64)
}

/// Bilinear resampling in native units without quantization.
pub(crate) fn resample_values(img: &ImageBuffer, out_h: usize, out_w: usize) -> Vec<f64> {
    let ch = img.channels;
    let cols: Vec<_> = (0..out_w).map(|x| sample_axis(x, img.width, out_w)).collect();
    let mut values = Vec::with_capacity(out_h * out_w * ch);
    for y in 0..out_h {
        let (y0, y1, fy) = sample_axis(y, img.height, out_h);
        for &(x0, x1, fx) in &cols {
            for c in 0..ch {
                let top = img.at(y0, x0, c) * (1.0 - fx) + img.at(y0, x1, c) * fx;
                let bottom = img.at(y1, x0, c) * (1.0 - fx) + img.at(y1, x1, c) * fx;
                values.push(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    values
}

/// Bilinear resize with half-pixel centers (`align_corners = false`).
///
/// The output keeps the input's scale tag; 8-bit results are rounded half-up.
pub fn resize_bilinear(img: &ImageBuffer, out_h: usize, out_w: usize) -> Result<ImageBuffer> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidArgument(format!("resize target {out_h}x{out_w}")));
    }
    if (out_h, out_w) == (img.height, img.width) {
        return Ok(img.clone());
    }
    let values = resample_values(img, out_h, out_w);
    let pixels = match img.scale() {
        Scale::U8 => Pixels::U8(values.into_iter().map(quantize_u8).collect()),
        Scale::Unit => Pixels::F32(values.into_iter().map(|v| v.clamp(0.0, 1.0) as f32).collect()),
    };
    Ok(ImageBuffer { height: out_h, width: out_w, channels: img.channels, pixels })
}
