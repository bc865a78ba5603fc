use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spatial::{random_sample, KnnIndex, SampleSpec};

use super::params::{ExtractorParams, Standardization};
use super::positional::{positional_encode, POSITIONAL_DIM};
use super::{unit_seed, HopConfig};

/// One encoder hop before standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedHop {
    /// Indices of the sampled centers into the previous level.
    pub sampled: Vec<usize>,
    pub positions: Vec<[f64; 3]>,
    /// `M x (D + 10)` max-pooled neighborhood features.
    pub pooled: Matrix,
}

/// One standardized level of the pyramid.
#[derive(Debug, Clone, PartialEq)]
pub struct HopLevel {
    pub sampled: Vec<usize>,
    pub positions: Vec<[f64; 3]>,
    pub features: Matrix,
}

/// Encoder output for one unit: the input level plus one level per hop.
#[derive(Debug, Clone, PartialEq)]
pub struct HopPyramid {
    pub input_positions: Vec<[f64; 3]>,
    pub input_features: Matrix,
    pub levels: Vec<HopLevel>,
    pub params: ExtractorParams,
}

impl HopPyramid {
    /// Positions and features of level `h` (0 = input).
    pub fn level(&self, h: usize) -> (&[[f64; 3]], &Matrix) {
        if h == 0 {
            (&self.input_positions, &self.input_features)
        } else {
            let l = &self.levels[h - 1];
            (&l.positions, &l.features)
        }
    }

    pub fn num_hops(&self) -> usize {
        self.levels.len()
    }
}

/// Where standardization statistics come from.
#[derive(Debug, Clone, Copy)]
pub enum StandardizeMode<'a> {
    /// Compute them from this unit's own pooled features.
    Fit,
    /// Reuse statistics fitted earlier (test time, or fitted over a
    /// training set with [`fit_params`]).
    Apply(&'a ExtractorParams),
}

/// Gathers the `k` nearest `points` around each center and max-pools
/// `feats[neighbor] ⊕ positional_encode(center, neighbor)` component-wise.
/// Fewer than `k` points pad by repeating the farthest neighbor, which
/// leaves the maximum unchanged.
pub fn max_pool_neighbors(
    points: &[[f64; 3]],
    feats: &Matrix,
    centers: &[[f64; 3]],
    k: usize,
) -> Result<Matrix> {
    if points.len() != feats.rows() {
        return Err(Error::state(format!(
            "{} points but {} feature rows",
            points.len(),
            feats.rows()
        )));
    }
    let index = KnnIndex::build(points)?;
    max_pool_with_index(&index, feats, centers, k)
}

fn max_pool_with_index(
    index: &KnnIndex,
    feats: &Matrix,
    centers: &[[f64; 3]],
    k: usize,
) -> Result<Matrix> {
    let dim = feats.cols();
    let width = dim + POSITIONAL_DIM;
    let points = index.points();
    let k = k.min(points.len());
    let mut out = Matrix::zeros(centers.len(), width);
    out.as_mut_slice()
        .par_chunks_mut(width)
        .zip(centers.par_iter())
        .for_each(|(row, center)| {
            row.fill(f64::NEG_INFINITY);
            for (_, j) in index.nearest(center, k) {
                for (acc, v) in row[..dim].iter_mut().zip(feats.row(j)) {
                    if *v > *acc {
                        *acc = *v;
                    }
                }
                let code = positional_encode(center, &points[j]);
                for (acc, v) in row[dim..].iter_mut().zip(code) {
                    if v > *acc {
                        *acc = v;
                    }
                }
            }
        });
    Ok(out)
}

/// Random sampling of centers followed by neighborhood max pooling.
pub fn encoder_hop(
    points: &[[f64; 3]],
    feats: &Matrix,
    ratio: f64,
    k: usize,
    seed: u64,
) -> Result<EncodedHop> {
    if points.is_empty() {
        return Err(Error::state("encoder hop on an empty level"));
    }
    if points.len() != feats.rows() {
        return Err(Error::state(format!(
            "{} points but {} feature rows",
            points.len(),
            feats.rows()
        )));
    }
    let sampled = random_sample(points.len(), SampleSpec::new(ratio, seed)?)?;
    let positions: Vec<[f64; 3]> = sampled.iter().map(|&i| points[i]).collect();
    let index = KnnIndex::build(points)?;
    let pooled = max_pool_with_index(&index, feats, &positions, k)?;
    Ok(EncodedHop {
        sampled,
        positions,
        pooled,
    })
}

#[inline]
fn hop_seed(unit_seed: u64, hop: usize) -> u64 {
    unit_seed.wrapping_add(hop as u64)
}

fn check_unit(unit: &PointCloud) -> Result<&Matrix> {
    let feats = unit
        .attributes()
        .ok_or_else(|| Error::state(format!("unit {} has no attributes", unit.unit_id())))?;
    if !feats.is_finite() {
        return Err(Error::state(format!("unit {} has non-finite attributes", unit.unit_id())));
    }
    Ok(feats)
}

/// Runs every encoder hop over one unit.
pub fn encode(unit: &PointCloud, config: &HopConfig, mode: StandardizeMode<'_>) -> Result<HopPyramid> {
    config.validate()?;
    let input = check_unit(unit)?;
    if let StandardizeMode::Apply(p) = mode {
        if p.hops.len() != config.num_hops() {
            return Err(Error::state(format!(
                "params hold {} hops, config has {}",
                p.hops.len(),
                config.num_hops()
            )));
        }
    }
    let seed = unit_seed(config.seed, unit.unit_id());

    let mut levels: Vec<HopLevel> = Vec::with_capacity(config.num_hops());
    let mut stats = Vec::with_capacity(config.num_hops());
    for (h, &ratio) in config.sample_ratios.iter().enumerate() {
        let (points, feats) = match levels.last() {
            Some(l) => (l.positions.as_slice(), &l.features),
            None => (unit.positions(), input),
        };
        let hop = encoder_hop(points, feats, ratio, config.k_neighbors, hop_seed(seed, h))?;
        let s = match mode {
            StandardizeMode::Fit => Standardization::fit([&hop.pooled])?,
            StandardizeMode::Apply(p) => p.hops[h],
        };
        let mut features = hop.pooled;
        s.apply(&mut features);
        stats.push(s);
        levels.push(HopLevel {
            sampled: hop.sampled,
            positions: hop.positions,
            features,
        });
    }
    Ok(HopPyramid {
        input_positions: unit.positions().to_vec(),
        input_features: input.clone(),
        levels,
        params: ExtractorParams { hops: stats },
    })
}

/// Fits one global mean/std per hop over a whole set of units.
///
/// Proceeds hop by hop: every unit is advanced one level, the pooled
/// matrices of all units are pooled into one statistic, and that statistic
/// standardizes the level before the next hop. Encoding a unit later with
/// [`StandardizeMode::Apply`] reproduces exactly the same levels.
pub fn fit_params(units: &[&PointCloud], config: &HopConfig) -> Result<ExtractorParams> {
    config.validate()?;
    if units.is_empty() {
        return Err(Error::EmptyInput("no units to fit extractor statistics on".into()));
    }
    let seeds: Vec<u64> = units
        .iter()
        .map(|u| unit_seed(config.seed, u.unit_id()))
        .collect();
    let mut current: Vec<(Vec<[f64; 3]>, Matrix)> = units
        .iter()
        .map(|u| Ok((u.positions().to_vec(), check_unit(u)?.clone())))
        .collect::<Result<_>>()?;

    let mut hops = Vec::with_capacity(config.num_hops());
    for (h, &ratio) in config.sample_ratios.iter().enumerate() {
        let encoded = current
            .par_iter()
            .zip(seeds.par_iter())
            .map(|((points, feats), &seed)| {
                encoder_hop(points, feats, ratio, config.k_neighbors, hop_seed(seed, h))
            })
            .collect::<Result<Vec<_>>>()?;
        let s = Standardization::fit(encoded.iter().map(|e| &e.pooled))?;
        current = encoded
            .into_iter()
            .map(|mut e| {
                s.apply(&mut e.pooled);
                (e.positions, e.pooled)
            })
            .collect();
        hops.push(s);
    }
    Ok(ExtractorParams { hops })
}
