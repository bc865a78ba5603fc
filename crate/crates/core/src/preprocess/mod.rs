//! Turning raw rooms into training and testing units.
//!
//! Three unitization styles are supported:
//!
//! * **block**: 1 m x 1 m footprint columns, each resampled to 4,096 points;
//! * **view**: 40,960-point KNN neighborhoods around reference points chosen
//!   by a possibility score that steers later units away from covered areas;
//! * **room**: the whole voxel-downsampled room as one variable-size unit.
//!
//! Rooms are independent, so every style processes them in parallel with a
//! per-room seed of `seed ^ room_index`.

mod block;
mod stats;
mod view;
mod voxel;

pub use block::make_block_units;
pub use stats::{dataset_stats, stats_from_sizes, DatasetStats};
pub use view::{make_view_units, ViewConfig};
pub use voxel::{voxel_downsample, voxel_key, VoxelGrid};

use rayon::prelude::*;

use crate::cloud::{PointCloud, Split, Style, UnitSet};
use crate::error::{Error, Result};

pub const BLOCK_UNIT_POINTS: usize = 4096;
pub const VIEW_UNIT_POINTS: usize = 40960;
pub const DEFAULT_GRID_SIZE: f64 = 0.04;
pub const DEFAULT_BLOCK_SIZE: f64 = 1.0;

/// Seed for the room at `room_index`.
#[inline]
pub fn room_seed(seed: u64, room_index: usize) -> u64 {
    seed ^ room_index as u64
}

/// One unit per room: the voxel-downsampled room itself.
pub fn make_room_units(
    rooms: &[PointCloud],
    grid_size: f64,
    seed: u64,
    split: Split,
    fold: u8,
) -> Result<UnitSet> {
    if rooms.is_empty() {
        return Err(Error::argument("no rooms to unitize"));
    }
    let units = rooms
        .par_iter()
        .enumerate()
        .map(|(i, room)| voxel_downsample(room, grid_size, room_seed(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    UnitSet::new(units, Style::Room, split, fold)
}
