use rand::Rng;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::spatial::seeded_rng;

/// Cubic voxel partition anchored at `origin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelGrid {
    pub grid_size: f64,
    pub origin: [f64; 3],
}

impl VoxelGrid {
    pub fn new(grid_size: f64, origin: [f64; 3]) -> Result<Self> {
        if !(grid_size > 0.0 && grid_size.is_finite()) {
            return Err(Error::argument(format!("grid size {grid_size} must be positive")));
        }
        Ok(Self { grid_size, origin })
    }

    pub fn key(&self, p: &[f64; 3]) -> [i64; 3] {
        voxel_key(p, &self.origin, self.grid_size)
    }
}

#[inline]
pub fn voxel_key(p: &[f64; 3], origin: &[f64; 3], grid: f64) -> [i64; 3] {
    [
        ((p[0] - origin[0]) / grid).floor() as i64,
        ((p[1] - origin[1]) / grid).floor() as i64,
        ((p[2] - origin[2]) / grid).floor() as i64,
    ]
}

/// Keeps one randomly chosen member point per occupied voxel. The grid is
/// anchored at the cloud's minimum corner; output rows follow ascending
/// voxel key.
pub fn voxel_downsample(cloud: &PointCloud, grid_size: f64, seed: u64) -> Result<PointCloud> {
    let (origin, _) = cloud.bounds();
    let grid = VoxelGrid::new(grid_size, origin)?;
    let keys: Vec<[i64; 3]> = cloud.positions().iter().map(|p| grid.key(p)).collect();
    let mut order: Vec<usize> = (0..cloud.len()).collect();
    order.sort_by_key(|&i| (keys[i], i));

    let mut rng = seeded_rng(seed, 0);
    let mut keep = Vec::new();
    for group in order.chunk_by(|&a, &b| keys[a] == keys[b]) {
        keep.push(group[rng.random_range(0..group.len())]);
    }
    cloud.select(&keep, cloud.unit_id())
}
