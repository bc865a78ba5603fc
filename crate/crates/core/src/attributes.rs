//! Per-point input attributes (21 columns):
//!
//! | cols  | block      | notes                                   |
//! |-------|------------|-----------------------------------------|
//! | 0-2   | xyz        | raw coordinates, meters                 |
//! | 3-5   | rgb        | scaled to `[0, 1]`                      |
//! | 6-8   | norm_xyz   | per-unit min-max scaled to `[0, 1]`     |
//! | 9-11  | normal     | unit length, canonical `z >= 0`         |
//! | 12-17 | geometry   | eigenvalue features of the neighborhood |
//! | 18-20 | hsv        | hue scaled to `[0, 1)`                  |

use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spatial::KnnIndex;

pub const ATTRIBUTE_DIM: usize = 21;
pub const DEFAULT_K_LOCAL: usize = 16;

pub const ATTRIBUTE_NAMES: [&str; ATTRIBUTE_DIM] = [
    "x", "y", "z", "r", "g", "b", "norm_x", "norm_y", "norm_z", "normal_x", "normal_y", "normal_z",
    "linearity", "planarity", "sphericity", "omnivariance", "anisotropy", "surface_variation",
    "hue", "saturation", "value",
];

const EIGEN_EPS: f64 = 1e-12;

/// Eigenvalue shape descriptors of a local neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeometricFeatures {
    pub linearity: f64,
    pub planarity: f64,
    pub sphericity: f64,
    pub omnivariance: f64,
    pub anisotropy: f64,
    pub surface_variation: f64,
}

impl GeometricFeatures {
    /// From eigenvalues sorted `l1 >= l2 >= l3 >= 0`. Ratios with a
    /// denominator below 1e-12 are 0.
    pub fn from_eigenvalues(l1: f64, l2: f64, l3: f64) -> Self {
        let ratio = |num: f64, den: f64| if den < EIGEN_EPS { 0.0 } else { num / den };
        let sum = l1 + l2 + l3;
        Self {
            linearity: ratio(l1 - l2, l1),
            planarity: ratio(l2 - l3, l1),
            sphericity: ratio(l3, l1),
            omnivariance: (l1 * l2 * l3).cbrt(),
            anisotropy: ratio(l1 - l3, l1),
            surface_variation: ratio(l3, sum),
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [
            self.linearity,
            self.planarity,
            self.sphericity,
            self.omnivariance,
            self.anisotropy,
            self.surface_variation,
        ]
    }
}

/// Flips `n` into the half-space `z > 0`; on ties `y > 0`, then `x >= 0`.
pub fn orient_normal(n: [f64; 3]) -> [f64; 3] {
    let flip = if n[2] != 0.0 {
        n[2] < 0.0
    } else if n[1] != 0.0 {
        n[1] < 0.0
    } else {
        n[0] < 0.0
    };
    if flip {
        [-n[0], -n[1], -n[2]]
    } else {
        n
    }
}

/// Population covariance of a point set.
pub fn covariance(points: impl Iterator<Item = [f64; 3]> + Clone) -> Matrix3<f64> {
    let mut mean = [0.0; 3];
    let mut n = 0usize;
    for p in points.clone() {
        for a in 0..3 {
            mean[a] += p[a];
        }
        n += 1;
    }
    let inv = 1.0 / n.max(1) as f64;
    mean.iter_mut().for_each(|m| *m *= inv);
    let mut c = Matrix3::zeros();
    for p in points {
        let d = [p[0] - mean[0], p[1] - mean[1], p[2] - mean[2]];
        for i in 0..3 {
            for j in i..3 {
                c[(i, j)] += d[i] * d[j];
            }
        }
    }
    for i in 0..3 {
        for j in i..3 {
            c[(i, j)] *= inv;
            c[(j, i)] = c[(i, j)];
        }
    }
    c
}

/// Normal and shape features of one neighborhood's covariance.
pub fn local_shape(cov: Matrix3<f64>) -> ([f64; 3], GeometricFeatures) {
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let l = order.map(|i| eig.eigenvalues[i].max(0.0));
    let v = eig.eigenvectors.column(order[2]);
    let norm = v.norm();
    let normal = orient_normal([v[0] / norm, v[1] / norm, v[2] / norm]);
    (normal, GeometricFeatures::from_eigenvalues(l[0], l[1], l[2]))
}

/// Normals and eigenvalue features from each point's `k_local` nearest
/// neighbors (the point itself included).
pub fn compute_normals_and_geom(
    cloud: &PointCloud,
    k_local: usize,
) -> Result<(Vec<[f64; 3]>, Vec<GeometricFeatures>)> {
    if cloud.len() < 3 {
        return Err(Error::state(format!(
            "unit {} has {} points, need at least 3 for local geometry",
            cloud.unit_id(),
            cloud.len()
        )));
    }
    if k_local == 0 {
        return Err(Error::argument("k_local must be positive"));
    }
    let positions = cloud.positions();
    let index = KnnIndex::build(positions)?;
    let k = k_local.min(positions.len());
    let shapes: Vec<([f64; 3], GeometricFeatures)> = positions
        .par_iter()
        .map(|q| {
            let nbrs = index.nearest(q, k);
            local_shape(covariance(nbrs.iter().map(|&(_, i)| positions[i])))
        })
        .collect();
    Ok(shapes.into_iter().unzip())
}

/// Hexcone RGB to HSV with hue scaled to `[0, 1)`.
pub fn rgb_to_hsv(rgb: [f64; 3]) -> Result<[f64; 3]> {
    if rgb.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(Error::argument(format!("rgb {rgb:?} outside [0, 1]")));
    }
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else {
        let sector = if max == r {
            ((g - b) / delta).rem_euclid(6.0)
        } else if max == g {
            (b - r) / delta + 2.0
        } else {
            (r - g) / delta + 4.0
        };
        let h = sector / 6.0;
        if h >= 1.0 {
            0.0
        } else {
            h
        }
    };
    Ok([h, s, v])
}

/// Per-unit min-max scaling of each coordinate; a constant coordinate maps
/// to 0.
pub fn normalize_xyz(cloud: &PointCloud) -> Vec<[f64; 3]> {
    let (lo, hi) = cloud.bounds();
    let span = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    cloud
        .positions()
        .iter()
        .map(|p| {
            let mut out = [0.0; 3];
            for a in 0..3 {
                if span[a] > 0.0 {
                    out[a] = ((p[a] - lo[a]) / span[a]).clamp(0.0, 1.0);
                }
            }
            out
        })
        .collect()
}

/// Returns `cloud` with its 21-column attribute matrix attached.
pub fn build_attributes(cloud: &PointCloud, k_local: usize) -> Result<PointCloud> {
    let (normals, geom) = compute_normals_and_geom(cloud, k_local)?;
    let norm_xyz = normalize_xyz(cloud);
    let mut m = Matrix::zeros(cloud.len(), ATTRIBUTE_DIM);
    for i in 0..cloud.len() {
        let p = cloud.positions()[i];
        let rgb = cloud.colors()[i].map(|c| c as f64 / 255.0);
        let hsv = rgb_to_hsv(rgb)?;
        let row = m.row_mut(i);
        row[0..3].copy_from_slice(&p);
        row[3..6].copy_from_slice(&rgb);
        row[6..9].copy_from_slice(&norm_xyz[i]);
        row[9..12].copy_from_slice(&normals[i]);
        row[12..18].copy_from_slice(&geom[i].to_array());
        row[18..21].copy_from_slice(&hsv);
    }
    cloud.clone().with_attributes(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::seeded_rng;
    use rand::Rng;

    fn cloud(points: Vec<[f64; 3]>) -> PointCloud {
        let n = points.len();
        let colors = (0..n).map(|i| [(i * 37 % 256) as u8, (i * 11 % 256) as u8, 200]).collect();
        PointCloud::new("t", points, colors, None).unwrap()
    }

    fn plane_grid() -> Vec<[f64; 3]> {
        let mut pts = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                pts.push([i as f64 * 0.1, j as f64 * 0.1, 0.0]);
            }
        }
        pts
    }

    #[test]
    fn plane_normal_points_up() {
        let c = cloud(plane_grid());
        let (normals, geom) = compute_normals_and_geom(&c, 9).unwrap();
        // interior point with a symmetric 3x3 neighborhood
        let i = 10 * 20 + 10;
        let n = normals[i];
        assert!((n[2] - 1.0).abs() < 1e-9, "{n:?}");
        assert!((geom[i].planarity - 1.0).abs() < 1e-9);
        assert!(geom[i].sphericity.abs() < 1e-9);
        assert!(geom[i].surface_variation.abs() < 1e-9);
        assert!(normals.iter().all(|n| n[2] > 0.999));
    }

    #[test]
    fn line_is_linear() {
        let c = cloud((0..30).map(|i| [i as f64 * 0.05, 0.0, 0.0]).collect());
        let (_, geom) = compute_normals_and_geom(&c, 8).unwrap();
        for g in geom {
            assert!((g.linearity - 1.0).abs() < 1e-9);
            assert!(g.planarity.abs() < 1e-9);
        }
    }

    #[test]
    fn too_few_points() {
        let c = cloud(vec![[0.0; 3], [1.0, 0.0, 0.0]]);
        assert!(matches!(compute_normals_and_geom(&c, 16), Err(Error::State(_))));
    }

    #[test]
    fn degenerate_neighborhood_gives_zeros() {
        let c = cloud(vec![[1.0, 1.0, 1.0]; 5]);
        let (normals, geom) = compute_normals_and_geom(&c, 4).unwrap();
        assert_eq!(geom[0].to_array(), [0.0; 6]);
        let len: f64 = normals[0].iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((len - 1.0).abs() < 1e-9);
    }

    #[test]
    fn orientation_tie_breaks() {
        assert_eq!(orient_normal([0.0, 0.0, -1.0]), [0.0, 0.0, 1.0]);
        assert_eq!(orient_normal([0.3, -1.0, 0.0]), [-0.3, 1.0, 0.0]);
        assert_eq!(orient_normal([-1.0, 0.0, 0.0]), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn hsv_reference_colors() {
        assert_eq!(rgb_to_hsv([1.0, 0.0, 0.0]).unwrap(), [0.0, 1.0, 1.0]);
        assert_eq!(rgb_to_hsv([0.5, 0.5, 0.5]).unwrap(), [0.0, 0.0, 0.5]);
        let g = rgb_to_hsv([0.0, 1.0, 0.0]).unwrap();
        assert!((g[0] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(rgb_to_hsv([0.0, 0.0, 0.0]).unwrap(), [0.0, 0.0, 0.0]);
        assert!(matches!(rgb_to_hsv([1.2, 0.0, 0.0]), Err(Error::Argument(_))));
    }

    /// Inverse hexcone conversion, written from the textbook sector table.
    fn hsv_to_rgb([h, s, v]: [f64; 3]) -> [f64; 3] {
        let c = v * s;
        let hp = h * 6.0;
        let x = c * (1.0 - ((hp % 2.0) - 1.0).abs());
        let (r, g, b) = match hp as u32 {
            0 => (c, x, 0.0),
            1 => (x, c, 0.0),
            2 => (0.0, c, x),
            3 => (0.0, x, c),
            4 => (x, 0.0, c),
            _ => (c, 0.0, x),
        };
        let m = v - c;
        [r + m, g + m, b + m]
    }

    #[test]
    fn hsv_inverts() {
        let mut rng = seeded_rng(3, 0);
        for _ in 0..10_000 {
            let rgb = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
            let hsv = rgb_to_hsv(rgb).unwrap();
            assert!((0.0..1.0).contains(&hsv[0]));
            let back = hsv_to_rgb(hsv);
            for a in 0..3 {
                assert!((back[a] - rgb[a]).abs() < 1e-6, "{rgb:?} -> {hsv:?} -> {back:?}");
            }
        }
    }

    #[test]
    fn normalize_span() {
        let c = cloud(vec![[0.0, 0.0, 0.0], [2.0, 4.0, 1.0], [1.0, 2.0, 0.5]]);
        let n = normalize_xyz(&c);
        assert_eq!(n[0], [0.0, 0.0, 0.0]);
        assert_eq!(n[1], [1.0, 1.0, 1.0]);
        assert_eq!(n[2], [0.5, 0.5, 0.5]);
        let single = cloud(vec![[3.0, 4.0, 5.0]]);
        assert_eq!(normalize_xyz(&single), vec![[0.0; 3]]);
    }

    #[test]
    fn attribute_layout() {
        let mut rng = seeded_rng(8, 0);
        let pts: Vec<[f64; 3]> = (0..60)
            .map(|_| [rng.random::<f64>() * 3.0, rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let c = cloud(pts);
        let out = build_attributes(&c, 16).unwrap();
        let m = out.attributes().unwrap();
        assert_eq!(m.cols(), ATTRIBUTE_DIM);
        for i in 0..c.len() {
            assert_eq!(&m.row(i)[0..3], &c.positions()[i]);
            let n = &m.row(i)[9..12];
            assert!((n.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(n[2] >= 0.0);
            for (j, v) in m.row(i)[12..18].iter().enumerate() {
                assert!(*v >= 0.0);
                if j != 3 {
                    assert!(*v <= 1.0 + 1e-12);
                }
            }
            assert!(m.row(i)[12] + m.row(i)[13] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn translation_keeps_normals() {
        let mut rng = seeded_rng(21, 0);
        let pts: Vec<[f64; 3]> = (0..200)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>(), 0.1 * rng.random::<f64>()])
            .collect();
        let moved: Vec<[f64; 3]> = pts.iter().map(|p| [p[0] + 3.0, p[1] - 7.0, p[2] + 1.5]).collect();
        let (a, ga) = compute_normals_and_geom(&cloud(pts), 16).unwrap();
        let (b, gb) = compute_normals_and_geom(&cloud(moved), 16).unwrap();
        for i in 0..a.len() {
            let dot: f64 = (0..3).map(|k| a[i][k] * b[i][k]).sum();
            assert!(dot.abs() > 1.0 - 1e-6);
            assert!((ga[i].planarity - gb[i].planarity).abs() < 1e-6);
        }
    }
}
