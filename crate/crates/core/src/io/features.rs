//! GSIPFEAT: a fixed little-endian container for per-point feature matrices.
//!
//! ```text
//! offset  size  field
//!      0     8  magic "GSIPFEAT"
//!      8     4  u32 version (1)
//!     12     4  u32 rows N
//!     16     4  u32 cols D
//!     20     1  u8 dtype (0 = f32, 1 = f16)
//!     21   ...  N*D values, row-major
//! ```

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use half::f16;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const MAGIC: &[u8; 8] = b"GSIPFEAT";
const VERSION: u32 = 1;
pub(crate) const HEADER_LEN: usize = 21;

/// Storage precision of extracted features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F16,
}

impl Precision {
    fn dtype(self) -> u8 {
        match self {
            Precision::F32 => 0,
            Precision::F16 => 1,
        }
    }

    fn from_dtype(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Precision::F32),
            1 => Ok(Precision::F16),
            other => Err(Error::format(format!("unknown dtype byte {other}"))),
        }
    }

    pub fn bytes_per_value(self) -> usize {
        match self {
            Precision::F32 => 4,
            Precision::F16 => 2,
        }
    }

    /// Rounds `v` to the nearest value representable at this precision.
    #[inline]
    pub fn round(self, v: f64) -> f64 {
        match self {
            Precision::F32 => v as f32 as f64,
            Precision::F16 => f16::from_f64(v).to_f64(),
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::F32 => "f32",
            Precision::F16 => "f16",
        })
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" | "32" => Ok(Precision::F32),
            "f16" | "16" => Ok(Precision::F16),
            other => Err(Error::argument(format!("unknown precision {other:?}"))),
        }
    }
}

/// Writes the attribute matrix of `cloud`.
pub fn write_feature_file(cloud: &PointCloud, precision: Precision, path: &Path) -> Result<()> {
    let attributes = cloud
        .attributes()
        .ok_or_else(|| Error::state(format!("unit {} has no attributes", cloud.unit_id())))?;
    let mut w = BufWriter::new(File::create(path)?);
    write_features(attributes, precision, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_features(m: &Matrix, precision: Precision, w: &mut impl Write) -> Result<()> {
    if !m.is_finite() {
        return Err(Error::state("feature matrix contains non-finite values"));
    }
    let rows = u32::try_from(m.rows()).map_err(|_| Error::state("too many rows"))?;
    let cols = u32::try_from(m.cols()).map_err(|_| Error::state("too many columns"))?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&rows.to_le_bytes())?;
    w.write_all(&cols.to_le_bytes())?;
    w.write_all(&[precision.dtype()])?;
    let mut buf = Vec::with_capacity(m.as_slice().len() * precision.bytes_per_value());
    for &v in m.as_slice() {
        match precision {
            Precision::F32 => {
                let x = v as f32;
                if !x.is_finite() {
                    return Err(Error::state(format!("{v} overflows f32")));
                }
                buf.extend_from_slice(&x.to_le_bytes());
            }
            Precision::F16 => {
                let x = f16::from_f64(v);
                if !x.is_finite() {
                    return Err(Error::state(format!("{v} overflows f16")));
                }
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_feature_file(path: &Path) -> Result<Matrix> {
    let mut r = BufReader::new(File::open(path)?);
    read_features(&mut r).map(|(m, _)| m)
}

/// Reads a matrix and the precision it was stored at.
pub fn read_features(r: &mut impl Read) -> Result<(Matrix, Precision)> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|_| Error::format("truncated header"))?;
    if &header[..8] != MAGIC {
        return Err(Error::format("bad magic, not a GSIPFEAT file"));
    }
    let word = |at: usize| u32::from_le_bytes(header[at..at + 4].try_into().unwrap());
    let version = word(8);
    if version != VERSION {
        return Err(Error::format(format!("unsupported version {version}")));
    }
    let rows = word(12) as usize;
    let cols = word(16) as usize;
    let precision = Precision::from_dtype(header[20])?;

    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::format("dimensions overflow"))?;
    let mut payload = Vec::new();
    r.take((count * precision.bytes_per_value()) as u64 + 1)
        .read_to_end(&mut payload)?;
    if payload.len() != count * precision.bytes_per_value() {
        return Err(Error::format(format!(
            "payload has {} bytes, expected {}",
            payload.len(),
            count * precision.bytes_per_value()
        )));
    }
    let data = match precision {
        Precision::F32 => payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect(),
        Precision::F16 => payload
            .chunks_exact(2)
            .map(|b| f16::from_le_bytes(b.try_into().unwrap()).to_f64())
            .collect(),
    };
    Ok((Matrix::from_vec(rows, cols, data)?, precision))
}
