//! Dense float tensors and the NPY v1.0 interchange format.
//!
//! Only little-endian `float32` in C order is accepted, which is all the
//! embedding caches and fixtures need. Files written here load in numpy
//! with `np.load` unchanged.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major `f32` tensor with a non-empty shape.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorF32 {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl TensorF32 {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::InvalidArgument(format!("invalid tensor shape {shape:?}")));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::shape(n, data.len()));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let n = shape.iter().product();
        Self::new(shape, vec![0.0; n])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_parts(self) -> (Vec<usize>, Vec<f32>) {
        (self.shape, self.data)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Same data, new shape with equal element count.
    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Self::new(shape, self.data)
    }
}

const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;

/// Serializes a tensor as NPY v1.0.
pub fn write_npy<W: Write>(mut w: W, t: &TensorF32) -> std::io::Result<()> {
    let shape = match t.shape.as_slice() {
        [n] => format!("({n},)"),
        dims => format!(
            "({})",
            dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
        ),
    };
    let mut header = format!("{{'descr': '<f4', 'fortran_order': False, 'shape': {shape}, }}");
    // magic(6) + version(2) + len(2) + header + '\n' padded to a multiple of ALIGN
    let unpadded = MAGIC.len() + 4 + header.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    header.extend(std::iter::repeat_n(' ', pad));
    header.push('\n');

    w.write_all(MAGIC)?;
    w.write_all(&[1, 0])?;
    w.write_all(&(header.len() as u16).to_le_bytes())?;
    w.write_all(header.as_bytes())?;
    let mut payload = Vec::with_capacity(t.data.len() * 4);
    for v in &t.data {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&payload)
}

/// Parses an NPY byte stream (versions 1.0 and 2.0).
pub fn read_npy(bytes: &[u8]) -> Result<TensorF32> {
    let bad = |m: &str| Error::MalformedFile(format!("npy: {m}"));
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(bad("missing magic"));
    }
    let (header_len, start) = match bytes[6] {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 | 3 if bytes.len() >= 12 => {
            (u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize, 12)
        }
        v => return Err(bad(&format!("unsupported version {v}"))),
    };
    let end = start + header_len;
    if bytes.len() < end {
        return Err(bad("truncated header"));
    }
    let header = std::str::from_utf8(&bytes[start..end]).map_err(|_| bad("non-ascii header"))?;
    let descr = dict_value(header, "descr").ok_or_else(|| bad("no descr"))?;
    let descr = descr.trim_matches(|c| c == '\'' || c == '"');
    match descr {
        "<f4" => {}
        ">f4" => return Err(Error::UnsupportedByteOrder(descr.into())),
        _ => return Err(Error::UnsupportedDtype(descr.into())),
    }
    match dict_value(header, "fortran_order") {
        Some("False") => {}
        Some("True") => return Err(bad("fortran order not supported")),
        _ => return Err(bad("no fortran_order")),
    }
    let shape_src = dict_value(header, "shape").ok_or_else(|| bad("no shape"))?;
    let shape = shape_src
        .trim_start_matches('(')
        .trim_end_matches(')')
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| bad("bad shape entry")))
        .collect::<Result<Vec<_>>>()?;
    if shape.is_empty() || shape.contains(&0) {
        return Err(bad("empty shape"));
    }
    let n: usize = shape.iter().product();
    let payload = &bytes[end..];
    if payload.len() != n * 4 {
        return Err(bad(&format!(
            "shape {shape:?} needs {} payload bytes, found {}",
            n * 4,
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    TensorF32::new(shape, data)
}

/// Extracts the raw value text for `key` from a python dict literal.
fn dict_value<'a>(header: &'a str, key: &str) -> Option<&'a str> {
    let pat_single = format!("'{key}'");
    let pat_double = format!("\"{key}\"");
    let pos = header
        .find(&pat_single)
        .map(|p| p + pat_single.len())
        .or_else(|| header.find(&pat_double).map(|p| p + pat_double.len()))?;
    let rest = header[pos..].trim_start().strip_prefix(':')?.trim_start();
    let end = if rest.starts_with('(') {
        rest.find(')')? + 1
    } else {
        rest.find([',', '}']).unwrap_or(rest.len())
    };
    Some(rest[..end].trim())
}

pub fn read_tensor_file(path: impl AsRef<Path>) -> Result<TensorF32> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    read_npy(&bytes)
}

pub fn write_tensor_file(path: impl AsRef<Path>, t: &TensorF32) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_npy(&mut buf, t).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
