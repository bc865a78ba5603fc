//! Local attributes against an independent Jacobi eigensolver and a
//! brute-force neighbor search.

use greenseg_core::attributes::{build_attributes, ATTRIBUTE_DIM};
use greenseg_core::cloud::PointCloud;
use greenseg_core::spatial::seeded_rng;
use rand::Rng;

const K: usize = 16;

/// Cyclic Jacobi rotations; returns eigenvalues and eigenvectors (columns).
fn jacobi(mut a: [[f64; 3]; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _ in 0..100 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off < 1e-300 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut b = a;
            for k in 0..3 {
                b[k][p] = c * a[k][p] - s * a[k][q];
                b[k][q] = s * a[k][p] + c * a[k][q];
            }
            a = b;
            for k in 0..3 {
                b[p][k] = c * a[p][k] - s * a[q][k];
                b[q][k] = s * a[p][k] + c * a[q][k];
            }
            a = b;
            for row in v.iter_mut() {
                let (x, y) = (row[p], row[q]);
                row[p] = c * x - s * y;
                row[q] = s * x + c * y;
            }
        }
    }
    ([a[0][0], a[1][1], a[2][2]], v)
}

fn blob(seed: u64, n: usize, scale: [f64; 3]) -> PointCloud {
    let mut rng = seeded_rng(seed, 0);
    let pts = (0..n)
        .map(|_| [0, 1, 2].map(|a| rng.random_range(-1.0..1.0) * scale[a]))
        .collect();
    let colors = (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
    PointCloud::new("blob", pts, colors, None).unwrap()
}

fn oracle_row(cloud: &PointCloud, i: usize) -> ([f64; 3], [f64; 3], [f64; 6]) {
    let pts = cloud.positions();
    let q = pts[i];
    let mut all: Vec<(f64, usize)> = pts
        .iter()
        .enumerate()
        .map(|(j, p)| ((0..3).map(|a| (p[a] - q[a]).powi(2)).sum(), j))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let nb: Vec<[f64; 3]> = all[..K].iter().map(|&(_, j)| pts[j]).collect();
    let mean = [0, 1, 2].map(|a| nb.iter().map(|p| p[a]).sum::<f64>() / K as f64);
    let mut cov = [[0.0; 3]; 3];
    for p in &nb {
        for r in 0..3 {
            for c in 0..3 {
                cov[r][c] += (p[r] - mean[r]) * (p[c] - mean[c]) / K as f64;
            }
        }
    }
    let (vals, vecs) = jacobi(cov);
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let l = order.map(|k| vals[k].max(0.0));
    let normal = [0, 1, 2].map(|r| vecs[r][order[2]]);
    let (l1, l2, l3) = (l[0], l[1], l[2]);
    let geom = [
        (l1 - l2) / l1,
        (l2 - l3) / l1,
        l3 / l1,
        (l1 * l2 * l3).cbrt(),
        (l1 - l3) / l1,
        l3 / (l1 + l2 + l3),
    ];
    (l, normal, geom)
}

#[test]
fn geometry_matches_jacobi_oracle() {
    for (seed, scale) in [(1, [3.0, 1.0, 0.2]), (2, [1.0, 1.0, 1.0]), (3, [5.0, 0.5, 0.05])] {
        let cloud = blob(seed, 400, scale);
        let with = build_attributes(&cloud, K).unwrap();
        let attrs = with.attributes().unwrap();
        assert_eq!(attrs.cols(), ATTRIBUTE_DIM);
        for i in 0..cloud.len() {
            let row = attrs.row(i);
            let (l, normal, geom) = oracle_row(&cloud, i);
            for (a, b) in row[12..18].iter().zip(geom) {
                assert!((a - b).abs() < 1e-8, "point {i}: {a} vs {b}");
            }
            // normals are only defined up to sign and need a clear gap
            if l[1] - l[2] > 1e-3 * l[0] {
                let dot: f64 = (0..3).map(|a| row[9 + a] * normal[a]).sum();
                assert!((dot.abs() - 1.0).abs() < 1e-8, "point {i}: dot {dot}");
                assert!(row[11] >= 0.0);
            }
        }
    }
}

#[test]
fn raw_columns_are_copied() {
    let cloud = blob(9, 50, [1.0, 2.0, 3.0]);
    let attrs = build_attributes(&cloud, K).unwrap();
    let m = attrs.attributes().unwrap();
    for (i, (p, c)) in cloud.positions().iter().zip(cloud.colors()).enumerate() {
        assert_eq!(&m.row(i)[..3], p);
        for a in 0..3 {
            assert_eq!(m.get(i, 3 + a), c[a] as f64 / 255.0);
            assert!((0.0..=1.0).contains(&m.get(i, 6 + a)));
            assert!((0.0..1.0 + 1e-12).contains(&m.get(i, 18 + a)));
        }
    }
}
