use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const OK_STATUS: &str = "ok";
pub const NO_DISTORTION: &str = "none";
pub const CSV_HEADER: [&str; 7] = ["pair_id", "metric", "distortion", "degree", "seed", "status", "value"];

/// Fixed six-decimal rendering used for every float written to disk.
/// Exact binary ties round to even; negative zero prints without a sign.
pub fn fmt6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.6}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

/// [`fmt6`] read back as a number, for JSON output.
pub fn round6(v: f64) -> f64 {
    fmt6(v).parse().unwrap_or(v)
}

/// One metric value for one (pair, distortion, degree, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub pair_id: String,
    pub metric: String,
    pub distortion: String,
    pub degree: f64,
    pub seed: u64,
    pub status: String,
    /// Present only when `status` is `ok`. PSNR of identical images is
    /// `+inf`.
    pub value: Option<f64>,
}

impl SweepRecord {
    pub fn is_ok(&self) -> bool {
        self.status == OK_STATUS
    }

    /// Canonical output order. Degrees are non-negative, so their bit
    /// patterns sort numerically.
    pub fn sort_key(&self) -> (&str, &str, &str, u64, u64) {
        (&self.pair_id, &self.metric, &self.distortion, (self.degree + 0.0).to_bits(), self.seed)
    }
}

pub fn sort_records(records: &mut [SweepRecord]) {
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io("<records>", e),
        other => Error::MalformedFile(format!("records csv: {other:?}")),
    }
}

pub fn write_records_to<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        let value = match r.value {
            Some(v) if r.is_ok() => fmt6(v),
            _ => String::new(),
        };
        let degree = fmt6(r.degree);
        let seed = r.seed.to_string();
        w.write_record([
            r.pair_id.as_str(),
            r.metric.as_str(),
            r.distortion.as_str(),
            degree.as_str(),
            seed.as_str(),
            r.status.as_str(),
            value.as_str(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<records>", e))
}

pub fn write_records(records: &[SweepRecord], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_records_to(records, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_records_from<R: Read>(input: R) -> Result<Vec<SweepRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::MalformedFile(format!("unexpected records header {header:?}")));
    }
    let num = |field: &str, s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::MalformedFile(format!("bad {field} {s:?}")))
    };
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err)?;
        let status = row[5].to_string();
        let value = if row[6].is_empty() { None } else { Some(num("value", &row[6])?) };
        if status == OK_STATUS && value.is_none() {
            return Err(Error::MalformedFile(format!("ok row without a value for {}", &row[0])));
        }
        out.push(SweepRecord {
            pair_id: row[0].to_string(),
            metric: row[1].to_string(),
            distortion: row[2].to_string(),
            degree: num("degree", &row[3])?,
            seed: row[4]
                .parse()
                .map_err(|_| Error::MalformedFile(format!("bad seed {:?}", &row[4])))?,
            status,
            value,
        });
    }
    Ok(out)
}

pub fn read_records(path: &Path) -> Result<Vec<SweepRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_records_from(std::io::BufReader::new(f))
}
