use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Integer type holding one bin id.
pub trait BinIndex: Copy + Send + Sync + Into<usize> + 'static {
    const CAPACITY: usize;
    fn from_usize(v: usize) -> Self;
}

impl BinIndex for u8 {
    const CAPACITY: usize = 1 << 8;
    fn from_usize(v: usize) -> Self {
        v as u8
    }
}

impl BinIndex for u16 {
    const CAPACITY: usize = 1 << 16;
    fn from_usize(v: usize) -> Self {
        v as u16
    }
}

/// Split thresholds of one feature. A value `x` falls in bin `b`, the first
/// bin with `x <= cuts[b]`, or in the last bin when it exceeds every cut.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCuts {
    pub cuts: Vec<f32>,
}

impl FeatureCuts {
    /// At most `max_bins` bins. Every distinct value gets its own bin when
    /// there are few enough of them; otherwise cuts sit at quantiles.
    pub fn from_values(values: &[f32], max_bins: usize) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f32::total_cmp);
        let mut uniq = sorted.clone();
        uniq.dedup();
        let mut cuts = Vec::new();
        if uniq.len() <= max_bins {
            for w in uniq.windows(2) {
                cuts.push(midpoint(w[0], w[1]));
            }
        } else {
            let n = sorted.len();
            for k in 1..max_bins {
                let v = sorted[(k * n / max_bins).max(1) - 1];
                let next = sorted.partition_point(|x| *x <= v);
                if next == n {
                    break;
                }
                let c = midpoint(v, sorted[next]);
                if cuts.last().is_none_or(|last| c > *last) {
                    cuts.push(c);
                }
            }
        }
        Self { cuts }
    }

    pub fn num_bins(&self) -> usize {
        self.cuts.len() + 1
    }

    pub fn bin(&self, x: f32) -> usize {
        self.cuts.partition_point(|c| *c < x)
    }
}

/// Midpoint of `a < b` that still separates them after rounding to f32.
fn midpoint(a: f32, b: f32) -> f32 {
    let m = ((a as f64 + b as f64) / 2.0) as f32;
    if m >= b || m < a {
        a
    } else {
        m
    }
}

/// Column-major bin ids for a feature matrix.
#[derive(Debug, Clone)]
pub struct BinnedMatrix<B> {
    rows: usize,
    cuts: Vec<FeatureCuts>,
    bins: Vec<B>,
}

impl<B: BinIndex> BinnedMatrix<B> {
    pub fn build(features: &Matrix, max_bins: usize) -> Result<Self> {
        if max_bins < 2 || max_bins > B::CAPACITY {
            return Err(Error::argument(format!(
                "bin count {max_bins} outside 2..={}",
                B::CAPACITY
            )));
        }
        let rows = features.rows();
        let cols = features.cols();
        let per_feature: Vec<(FeatureCuts, Vec<B>)> = (0..cols)
            .into_par_iter()
            .map(|f| {
                let column: Vec<f32> = (0..rows).map(|i| features.get(i, f) as f32).collect();
                let cuts = FeatureCuts::from_values(&column, max_bins);
                let bins = column.iter().map(|x| B::from_usize(cuts.bin(*x))).collect();
                (cuts, bins)
            })
            .collect();
        let mut all_cuts = Vec::with_capacity(cols);
        let mut bins = Vec::with_capacity(rows * cols);
        for (c, b) in per_feature {
            all_cuts.push(c);
            bins.extend(b);
        }
        Ok(Self {
            rows,
            cuts: all_cuts,
            bins,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cuts.len()
    }

    pub fn cuts(&self, feature: usize) -> &FeatureCuts {
        &self.cuts[feature]
    }

    pub fn column(&self, feature: usize) -> &[B] {
        &self.bins[feature * self.rows..(feature + 1) * self.rows]
    }
}
