use rand::Rng;
use rayon::prelude::*;

use crate::cloud::{PointCloud, Split, Style, UnitSet};
use crate::error::{Error, Result};
use crate::spatial::{seeded_rng, KnnIndex};

use super::{room_seed, voxel_downsample};

/// Parameters of view-style unitization.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewConfig {
    pub unit_size: usize,
    pub target_units: usize,
    pub grid_size: f64,
    /// Possibilities start uniform in `[0, init_scale)`.
    pub init_scale: f64,
    /// Constant added to every selected point's possibility on top of the
    /// distance term `(1 - d / d_max)^2`. Any value `>= init_scale` keeps
    /// points that were never selected ahead of every selected one.
    pub update_offset: f64,
}

impl Default for ViewConfig {
    fn default() -> Self {
        Self {
            unit_size: super::VIEW_UNIT_POINTS,
            target_units: 1,
            grid_size: super::DEFAULT_GRID_SIZE,
            init_scale: 1.0,
            update_offset: 1.0,
        }
    }
}

/// Produces `target_units` fixed-size KNN neighborhoods.
///
/// Rooms are voxel-downsampled first. Each round picks the point with the
/// lowest possibility over all rooms (ties: lower room, then lower point
/// index), takes its `unit_size` nearest neighbors inside its room (repeating
/// the farthest one when the room is smaller) and raises the possibility of
/// every selected point by `update_offset + (1 - d / d_max)^2`.
pub fn make_view_units(
    rooms: &[PointCloud],
    config: &ViewConfig,
    seed: u64,
    split: Split,
    fold: u8,
) -> Result<UnitSet> {
    if config.target_units < 1 {
        return Err(Error::argument("target unit count must be at least 1"));
    }
    if config.unit_size == 0 {
        return Err(Error::argument("unit size must be positive"));
    }
    if !(config.init_scale >= 0.0 && config.update_offset >= 0.0) {
        return Err(Error::argument("possibility parameters must be non-negative"));
    }
    if rooms.is_empty() {
        return Err(Error::argument("no rooms to unitize"));
    }

    let prepared = rooms
        .par_iter()
        .enumerate()
        .map(|(i, room)| {
            let seed = room_seed(seed, i);
            let down = voxel_downsample(room, config.grid_size, seed)?;
            let index = KnnIndex::build(down.positions())?;
            let mut rng = seeded_rng(seed, 1);
            let possibility: Vec<f64> = (0..down.len())
                .map(|_| rng.random::<f64>() * config.init_scale)
                .collect();
            Ok((down, index, possibility))
        })
        .collect::<Result<Vec<_>>>()?;

    let (clouds, (indices, mut possibilities)): (Vec<_>, (Vec<_>, Vec<_>)) = prepared
        .into_iter()
        .map(|(c, i, p)| (c, (i, p)))
        .unzip();

    let mut units = Vec::with_capacity(config.target_units);
    for n in 0..config.target_units {
        let (room, reference) = min_possibility(&possibilities);
        let cloud = &clouds[room];
        let center = cloud.positions()[reference];
        let neighbors = indices[room].nearest(&center, config.unit_size);

        let d_max = neighbors.last().map_or(0.0, |&(d2, _)| d2.sqrt());
        for &(d2, i) in &neighbors {
            let closeness = if d_max > 0.0 { 1.0 - d2.sqrt() / d_max } else { 1.0 };
            possibilities[room][i] += config.update_offset + closeness * closeness;
        }

        let mut rows: Vec<usize> = neighbors.iter().map(|&(_, i)| i).collect();
        let farthest = *rows.last().expect("rooms are non-empty");
        rows.resize(config.unit_size, farthest);
        units.push(cloud.select(&rows, format!("{}_view_{n}", cloud.unit_id()))?);
    }

    if config.unit_size == super::VIEW_UNIT_POINTS {
        UnitSet::new(units, Style::View, split, fold)
    } else {
        Ok(UnitSet {
            units,
            style: Style::View,
            split,
            fold,
        })
    }
}

fn min_possibility(possibilities: &[Vec<f64>]) -> (usize, usize) {
    let mut best = (0, 0);
    let mut best_v = f64::INFINITY;
    for (r, scores) in possibilities.iter().enumerate() {
        for (i, &v) in scores.iter().enumerate() {
            if v < best_v {
                best_v = v;
                best = (r, i);
            }
        }
    }
    best
}
