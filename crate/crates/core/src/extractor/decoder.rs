use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spatial::KnnIndex;

use super::encoder::HopPyramid;
use super::HopConfig;

/// Inverse-distance interpolation of `values` (one row per `source` point)
/// onto `targets` from the `k` nearest sources. A target that coincides
/// with a source copies that source's row exactly.
pub fn interpolate(
    sources: &[[f64; 3]],
    values: &Matrix,
    targets: &[[f64; 3]],
    k: usize,
) -> Result<Matrix> {
    if sources.len() != values.rows() {
        return Err(Error::state(format!(
            "{} source points but {} value rows",
            sources.len(),
            values.rows()
        )));
    }
    if k == 0 {
        return Err(Error::argument("interpolation needs at least one neighbor"));
    }
    let index = KnnIndex::build(sources)?;
    // no padding: duplicated neighbors would skew the weights
    let k = k.min(sources.len());
    let dim = values.cols();
    let mut out = Matrix::zeros(targets.len(), dim);
    if dim == 0 {
        return Ok(out);
    }
    out.as_mut_slice()
        .par_chunks_mut(dim)
        .zip(targets.par_iter())
        .for_each(|(row, t)| {
            let nbrs = index.nearest(t, k);
            if nbrs[0].0 == 0.0 {
                row.copy_from_slice(values.row(nbrs[0].1));
                return;
            }
            let inv: Vec<f64> = nbrs.iter().map(|&(d2, _)| 1.0 / d2.sqrt()).collect();
            let total: f64 = inv.iter().sum();
            for (&(_, j), w) in nbrs.iter().zip(&inv) {
                let w = w / total;
                for (acc, v) in row.iter_mut().zip(values.row(j)) {
                    *acc += w * v;
                }
            }
        });
    Ok(out)
}

/// Upsamples the pyramid back to the unit's points. Starting at the
/// coarsest hop, each step interpolates the running features onto the next
/// finer level and appends that level's own features.
pub fn decode(pyramid: &HopPyramid, positions: &[[f64; 3]], config: &HopConfig) -> Result<Matrix> {
    if positions.len() != pyramid.input_positions.len()
        || positions
            .iter()
            .zip(&pyramid.input_positions)
            .any(|(a, b)| a.map(f64::to_bits) != b.map(f64::to_bits))
    {
        return Err(Error::state("positions do not match the encoded unit"));
    }
    let hops = pyramid.num_hops();
    if hops == 0 {
        return Ok(pyramid.input_features.clone());
    }
    let (_, top) = pyramid.level(hops);
    let mut running = top.clone();
    for h in (0..hops).rev() {
        let (coarse_pos, _) = pyramid.level(h + 1);
        let (fine_pos, fine_feats) = pyramid.level(h);
        let up = interpolate(coarse_pos, &running, fine_pos, config.interp_neighbors)?;
        running = up.hconcat(fine_feats)?;
    }
    Ok(running)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::PointCloud;
    use crate::extractor::{encode, StandardizeMode};

    #[test]
    fn coincident_target_copies() {
        let src = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let vals = Matrix::from_rows(&[[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]]).unwrap();
        let out = interpolate(&src, &vals, &[src[1]], 3).unwrap();
        assert_eq!(out.row(0), vals.row(1));
    }

    #[test]
    fn equidistant_is_mean() {
        let src = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [5.0, 5.0, 5.0]];
        let vals = Matrix::from_rows(&[[3.0], [6.0], [9.0], [100.0]]).unwrap();
        let out = interpolate(&src, &vals, &[[0.0; 3]], 3).unwrap();
        assert!((out.get(0, 0) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn fewer_sources_than_k() {
        let src = [[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        let vals = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let out = interpolate(&src, &vals, &[[0.5, 0.0, 0.0]], 3).unwrap();
        // weights 1/0.5 and 1/1.5 -> 0.75 / 0.25
        assert!((out.get(0, 0) - 0.25).abs() < 1e-12);
    }

    fn tiny_unit(n: usize) -> PointCloud {
        let pts: Vec<[f64; 3]> = (0..n).map(|i| [i as f64 * 0.3, (i % 4) as f64, 0.1]).collect();
        let attrs = Matrix::from_vec(n, 2, (0..2 * n).map(|v| v as f64).collect()).unwrap();
        PointCloud::new("t", pts, vec![[0; 3]; n], None)
            .unwrap()
            .with_attributes(attrs)
            .unwrap()
    }

    #[test]
    fn output_rows_match_unit() {
        let cfg = HopConfig::default();
        for n in [1, 2, 5, 17, 300] {
            let u = tiny_unit(n);
            let pyr = encode(&u, &cfg, StandardizeMode::Fit).unwrap();
            let out = decode(&pyr, u.positions(), &cfg).unwrap();
            assert_eq!(out.rows(), n);
            assert_eq!(out.cols(), cfg.output_dim(2));
            assert!(out.is_finite());
            // the input attributes sit in the last columns
            for i in 0..n {
                assert_eq!(&out.row(i)[out.cols() - 2..], u.attributes().unwrap().row(i));
            }
        }
    }

    #[test]
    fn mismatched_positions() {
        let cfg = HopConfig::default();
        let u = tiny_unit(10);
        let pyr = encode(&u, &cfg, StandardizeMode::Fit).unwrap();
        assert!(matches!(
            decode(&pyr, &u.positions()[..9], &cfg),
            Err(Error::State(_))
        ));
    }
}
