use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::STD_EPSILON;

/// Scalar mean and standard deviation of one hop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub std: f64,
}

impl Standardization {
    /// Global statistics over every entry of every matrix, summed in order.
    pub fn fit<'a>(parts: impl IntoIterator<Item = &'a Matrix> + Clone) -> Result<Self> {
        let mut count = 0usize;
        let mut sum = 0.0;
        for m in parts.clone() {
            count += m.as_slice().len();
            sum += m.as_slice().iter().sum::<f64>();
        }
        if count == 0 {
            return Err(Error::state("cannot fit standardization on no values"));
        }
        let mean = sum / count as f64;
        let mut sq = 0.0;
        for m in parts {
            sq += m.as_slice().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
        }
        Ok(Self {
            mean,
            std: (sq / count as f64).sqrt(),
        })
    }

    pub fn apply(&self, m: &mut Matrix) {
        let scale = 1.0 / self.std.max(STD_EPSILON);
        for v in m.as_mut_slice() {
            *v = (*v - self.mean) * scale;
        }
    }
}

/// The extractor's only learned state: one [`Standardization`] per hop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorParams {
    pub hops: Vec<Standardization>,
}

impl ExtractorParams {
    pub fn parameter_count(&self) -> usize {
        2 * self.hops.len()
    }

    /// `hop<i>.mean=<v>` / `hop<i>.std=<v>` lines, hops numbered from 1.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# extractor standardization, one mean/std pair per hop\n");
        writeln!(s, "hops={}", self.hops.len()).unwrap();
        for (i, h) in self.hops.iter().enumerate() {
            writeln!(s, "hop{}.mean={}", i + 1, h.mean).unwrap();
            writeln!(s, "hop{}.std={}", i + 1, h.std).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut hop_count = None;
        let mut values: Vec<(Option<f64>, Option<f64>)> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::format(format!("params line {}: {line:?}", n + 1));
            let (key, value) = line.split_once('=').ok_or_else(bad)?;
            let (key, value) = (key.trim(), value.trim());
            if key == "hops" {
                hop_count = Some(value.parse::<usize>().map_err(|_| bad())?);
                continue;
            }
            let (hop, field) = key
                .strip_prefix("hop")
                .and_then(|k| k.split_once('.'))
                .ok_or_else(bad)?;
            let hop: usize = hop.parse().map_err(|_| bad())?;
            if hop == 0 {
                return Err(bad());
            }
            let v: f64 = value.parse().map_err(|_| bad())?;
            if !v.is_finite() {
                return Err(bad());
            }
            if values.len() < hop {
                values.resize(hop, (None, None));
            }
            match field {
                "mean" => values[hop - 1].0 = Some(v),
                "std" => values[hop - 1].1 = Some(v),
                _ => return Err(bad()),
            }
        }
        let hops = values
            .into_iter()
            .enumerate()
            .map(|(i, pair)| match pair {
                (Some(mean), Some(std)) => Ok(Standardization { mean, std }),
                _ => Err(Error::format(format!("hop {} is missing mean or std", i + 1))),
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(n) = hop_count {
            if n != hops.len() {
                return Err(Error::format(format!(
                    "params declare {n} hops but define {}",
                    hops.len()
                )));
            }
        }
        if hops.is_empty() {
            return Err(Error::format("params define no hops"));
        }
        Ok(Self { hops })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
