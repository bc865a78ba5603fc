use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::dist2;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: u32, end: u32 },
    Split { axis: u8, value: f64, left: u32, right: u32 },
}

/// Balanced 3-d tree answering exact Euclidean k-nearest-neighbor queries.
///
/// Results are ordered by `(distance, index)`, so equidistant points come
/// back lowest index first. The tree is immutable once built and can be
/// queried from many threads at once.
#[derive(Debug, Clone)]
pub struct KnnIndex {
    points: Vec<[f64; 3]>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

/// Row-major `M x k` neighbor indices with matching distances.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    k: usize,
    indices: Vec<usize>,
    distances: Vec<f64>,
}

impl NeighborTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.indices.len().checked_div(self.k).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self, row: usize) -> &[usize] {
        &self.indices[row * self.k..(row + 1) * self.k]
    }

    pub fn distances(&self, row: usize) -> &[f64] {
        &self.distances[row * self.k..(row + 1) * self.k]
    }

    pub fn flat_indices(&self) -> &[usize] {
        &self.indices
    }
}

impl KnnIndex {
    pub fn build(positions: &[[f64; 3]]) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::EmptyInput("cannot index an empty point set".into()));
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::state("cannot index non-finite positions"));
        }
        if positions.len() > u32::MAX as usize {
            return Err(Error::argument("too many points for one index"));
        }
        let points = positions.to_vec();
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1);
        build_node(&points, &mut order, 0, &mut nodes);
        Ok(Self {
            points,
            order,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    /// The `min(k, N)` nearest points to `query` as `(squared distance, index)`,
    /// sorted ascending.
    pub fn nearest(&self, query: &[f64; 3], k: usize) -> Vec<(f64, usize)> {
        let mut best = BinaryHeap::with_capacity(k.min(self.points.len()) + 1);
        if k > 0 {
            self.search(0, query, k, &mut best);
        }
        best.into_sorted_vec()
            .into_iter()
            .map(|c| (c.d2, c.index as usize))
            .collect()
    }

    /// Exactly `k` neighbors per query. When the index holds fewer than `k`
    /// points each row is padded by repeating its farthest neighbor.
    pub fn knn(&self, queries: &[[f64; 3]], k: usize) -> Result<NeighborTable> {
        if k == 0 {
            return Err(Error::argument("k must be positive"));
        }
        if queries.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::state("non-finite query point"));
        }
        let mut indices = vec![0usize; queries.len() * k];
        let mut distances = vec![0f64; queries.len() * k];
        indices
            .par_chunks_mut(k)
            .zip(distances.par_chunks_mut(k))
            .zip(queries.par_iter())
            .for_each(|((idx_row, dist_row), q)| {
                let found = self.nearest(q, k);
                let last = *found.last().expect("index is never empty");
                for j in 0..k {
                    let (d2, i) = found.get(j).copied().unwrap_or(last);
                    idx_row[j] = i;
                    dist_row[j] = d2.sqrt();
                }
            });
        Ok(NeighborTable {
            k,
            indices,
            distances,
        })
    }

    fn search(&self, node: usize, q: &[f64; 3], k: usize, best: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start as usize..end as usize] {
                    let d = dist2(q, &self.points[i as usize]);
                    offer(best, k, d, i);
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis as usize] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near as usize, q, k, best);
                // Equal bounds must still be visited: a tie at the worst
                // distance may be won by a lower index on the far side.
                if best.len() < k || diff * diff <= best.peek().map_or(f64::INFINITY, |c| c.d2) {
                    self.search(far as usize, q, k, best);
                }
            }
        }
    }
}

/// Heap entry ordered by `(squared distance, index)`.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    d2: f64,
    index: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.index.cmp(&other.index))
    }
}

#[inline]
fn offer(best: &mut BinaryHeap<Candidate>, k: usize, d2: f64, index: u32) {
    let cand = Candidate { d2, index };
    if best.len() == k {
        match best.peek() {
            Some(worst) if cand < *worst => {
                best.pop();
            }
            _ => return,
        }
    }
    best.push(cand);
}

fn build_node(points: &[[f64; 3]], order: &mut [u32], offset: usize, nodes: &mut Vec<Node>) -> u32 {
    let id = nodes.len();
    if order.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: offset as u32,
            end: (offset + order.len()) as u32,
        });
        return id as u32;
    }

    // split the widest axis at the median
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in order.iter() {
        let p = &points[i as usize];
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let axis = (0..3)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a)))
        .unwrap();
    if hi[axis] == lo[axis] {
        // all points coincide
        nodes.push(Node::Leaf {
            start: offset as u32,
            end: (offset + order.len()) as u32,
        });
        return id as u32;
    }

    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize][axis].total_cmp(&points[b as usize][axis])
    });
    let value = points[order[mid] as usize][axis];

    nodes.push(Node::Leaf { start: 0, end: 0 });
    let (left_part, right_part) = order.split_at_mut(mid);
    let left = build_node(points, left_part, offset, nodes);
    let right = build_node(points, right_part, offset + mid, nodes);
    nodes[id] = Node::Split {
        axis: axis as u8,
        value,
        left,
        right,
    };
    id as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    /// Brute force: sort every point by (distance, index), take k, pad.
    fn oracle(points: &[[f64; 3]], q: &[f64; 3], k: usize) -> Vec<usize> {
        let mut all: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d: f64 = (0..3).map(|a| (q[a] - p[a]) * (q[a] - p[a])).sum();
                (d, i)
            })
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut out: Vec<usize> = all.iter().take(k).map(|x| x.1).collect();
        while out.len() < k {
            out.push(*out.last().unwrap());
        }
        out
    }

    fn random_cloud(n: usize, seed: u64) -> Vec<[f64; 3]> {
        let mut rng = crate::spatial::seeded_rng(seed, 0);
        (0..n)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()])
            .collect()
    }

    #[test]
    fn single_point_index() {
        let idx = KnnIndex::build(&[[1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(idx.nearest(&[0.0; 3], 5).len(), 1);
        let t = idx.knn(&[[0.0; 3]], 5).unwrap();
        assert_eq!(t.indices(0), &[0, 0, 0, 0, 0]);
    }

    #[test]
    fn collinear_points() {
        let idx = KnnIndex::build(&[[2.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        let t = idx.knn(&[[0.0; 3]], 2).unwrap();
        assert_eq!(t.indices(0), &[1, 2]);
        assert_eq!(t.distances(0), &[0.0, 1.0]);
    }

    #[test]
    fn indexed_query_comes_first() {
        let pts = random_cloud(300, 4);
        let idx = KnnIndex::build(&pts).unwrap();
        let t = idx.knn(&pts, 3).unwrap();
        for i in 0..pts.len() {
            assert_eq!(t.indices(i)[0], i);
            assert_eq!(t.distances(i)[0], 0.0);
        }
    }

    #[test]
    fn padding_repeats_farthest() {
        let pts = random_cloud(5, 9);
        let idx = KnnIndex::build(&pts).unwrap();
        let q = [0.5, 0.5, 0.5];
        let t = idx.knn(&[q], 8).unwrap();
        assert_eq!(t.indices(0), oracle(&pts, &q, 8).as_slice());
        assert_eq!(t.indices(0)[4..], [t.indices(0)[4]; 4]);
    }

    #[test]
    fn ties_resolve_to_lower_index() {
        // many duplicates spread over several leaves
        let mut pts = Vec::new();
        for i in 0..200 {
            pts.push([(i % 4) as f64, 0.0, 0.0]);
        }
        let idx = KnnIndex::build(&pts).unwrap();
        let q = [1.0, 0.0, 0.0];
        let t = idx.knn(&[q], 60).unwrap();
        assert_eq!(t.indices(0), oracle(&pts, &q, 60).as_slice());
    }

    #[test]
    fn thousand_points_k64_matches_oracle() {
        let pts = random_cloud(1000, 1);
        let queries = random_cloud(50, 2);
        let idx = KnnIndex::build(&pts).unwrap();
        let t = idx.knn(&queries, 64).unwrap();
        for (r, q) in queries.iter().enumerate() {
            assert_eq!(t.indices(r), oracle(&pts, q, 64).as_slice());
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(KnnIndex::build(&[]).is_err());
        assert!(matches!(KnnIndex::build(&[[f64::NAN, 0.0, 0.0]]), Err(Error::State(_))));
        let idx = KnnIndex::build(&[[0.0; 3]]).unwrap();
        assert!(idx.knn(&[[0.0; 3]], 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn matches_brute_force(n in 1usize..600, k in 1usize..80, seed in any::<u64>(), grid in any::<bool>()) {
            let mut pts = random_cloud(n, seed);
            if grid {
                // coarse lattice forces many exact ties
                for p in &mut pts {
                    for v in p.iter_mut() {
                        *v = (*v * 4.0).floor();
                    }
                }
            }
            let mut queries = random_cloud(10, seed ^ 1);
            if grid {
                for q in &mut queries {
                    for v in q.iter_mut() {
                        *v = (*v * 4.0).floor();
                    }
                }
            }
            let idx = KnnIndex::build(&pts).unwrap();
            let t = idx.knn(&queries, k).unwrap();
            for (r, q) in queries.iter().enumerate() {
                let want = oracle(&pts, q, k);
                prop_assert_eq!(t.indices(r), want.as_slice());
            }
        }
    }
}
