use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::cloud::{PointCloud, Split, Style, UnitSet};
use crate::error::{Error, Result};
use crate::spatial::seeded_rng;

use super::room_seed;

/// Column index of every point in a `block_size` grid over the XY
/// footprint. The far edge of the footprint folds into the last cell, so a
/// 2 m x 1 m room makes exactly two 1 m blocks.
pub(crate) fn block_assignment(room: &PointCloud, block_size: f64) -> Vec<(i64, i64)> {
    let (lo, hi) = room.bounds();
    let cells = |axis: usize| (((hi[axis] - lo[axis]) / block_size).ceil() as i64).max(1);
    let (nx, ny) = (cells(0), cells(1));
    room.positions()
        .iter()
        .map(|p| {
            let bx = (((p[0] - lo[0]) / block_size).floor() as i64).min(nx - 1);
            let by = (((p[1] - lo[1]) / block_size).floor() as i64).min(ny - 1);
            (bx, by)
        })
        .collect()
}

/// Splits every room's footprint into `block_size` squares (Z untouched) and
/// resamples each non-empty block to `points_per_unit` rows: a random subset
/// when the block is large enough, otherwise every member once followed by
/// draws with replacement.
pub fn make_block_units(
    rooms: &[PointCloud],
    block_size: f64,
    points_per_unit: usize,
    seed: u64,
    split: Split,
    fold: u8,
) -> Result<UnitSet> {
    if !(block_size > 0.0 && block_size.is_finite()) {
        return Err(Error::argument(format!("block size {block_size} must be positive")));
    }
    if points_per_unit == 0 {
        return Err(Error::argument("points per unit must be positive"));
    }
    if rooms.is_empty() {
        return Err(Error::argument("no rooms to unitize"));
    }
    let per_room = rooms
        .par_iter()
        .enumerate()
        .map(|(i, room)| room_blocks(room, block_size, points_per_unit, room_seed(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    let units = per_room.into_iter().flatten().collect();
    if points_per_unit == super::BLOCK_UNIT_POINTS {
        UnitSet::new(units, Style::Block, split, fold)
    } else {
        // non-standard sizes skip the fixed-size check of the block style
        Ok(UnitSet {
            units,
            style: Style::Block,
            split,
            fold,
        })
    }
}

fn room_blocks(
    room: &PointCloud,
    block_size: f64,
    points_per_unit: usize,
    seed: u64,
) -> Result<Vec<PointCloud>> {
    let cells = block_assignment(room, block_size);
    let mut order: Vec<usize> = (0..room.len()).collect();
    order.sort_by_key(|&i| (cells[i], i));

    let mut rng = seeded_rng(seed, 0);
    let mut units = Vec::new();
    for members in order.chunk_by(|&a, &b| cells[a] == cells[b]) {
        let (bx, by) = cells[members[0]];
        let rows: Vec<usize> = if members.len() >= points_per_unit {
            let mut pool = members.to_vec();
            let (chosen, _) = pool.partial_shuffle(&mut rng, points_per_unit);
            chosen.to_vec()
        } else {
            let mut rows = members.to_vec();
            rows.extend(
                (members.len()..points_per_unit).map(|_| members[rng.random_range(0..members.len())]),
            );
            rows
        };
        units.push(room.select(&rows, format!("{}_block_{bx}_{by}", room.unit_id()))?);
    }
    Ok(units)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn grid_room(w: f64, d: f64, step: f64) -> PointCloud {
        let mut pts = Vec::new();
        let mut x = 0.0;
        while x <= w + 1e-9 {
            let mut y = 0.0;
            while y <= d + 1e-9 {
                pts.push([x.min(w), y.min(d), 1.0]);
                y += step;
            }
            x += step;
        }
        let n = pts.len();
        PointCloud::new("room", pts, vec![[0; 3]; n], None).unwrap()
    }

    #[test]
    fn footprint_two_by_one_makes_two_blocks() {
        let room = grid_room(2.0, 1.0, 0.1);
        let set = make_block_units(&[room], 1.0, 4096, 0, Split::Train, 6).unwrap();
        assert_eq!(set.units.len(), 2);
        assert!(set.units.iter().all(|u| u.len() == 4096));
    }

    #[test]
    fn sparse_block_is_filled_with_replacement() {
        let pts: Vec<[f64; 3]> = (0..10).map(|i| [i as f64 * 0.05, 0.0, 0.0]).collect();
        let room = PointCloud::new("r", pts.clone(), vec![[0; 3]; 10], None).unwrap();
        let set = make_block_units(&[room], 1.0, 4096, 7, Split::Train, 1).unwrap();
        assert_eq!(set.units.len(), 1);
        let unit = &set.units[0];
        assert_eq!(unit.len(), 4096);
        let drawn: HashSet<[u64; 3]> = unit.positions().iter().map(|p| p.map(f64::to_bits)).collect();
        let source: HashSet<[u64; 3]> = pts.iter().map(|p| p.map(f64::to_bits)).collect();
        assert_eq!(drawn, source);
    }

    #[test]
    fn blocks_partition_the_room() {
        let room = grid_room(3.3, 2.2, 0.05);
        let cells = block_assignment(&room, 1.0);
        let mut counts = std::collections::HashMap::new();
        for c in &cells {
            *counts.entry(*c).or_insert(0usize) += 1;
        }
        assert_eq!(counts.values().sum::<usize>(), room.len());
        assert_eq!(counts.len(), 4 * 3);
        let set = make_block_units(&[room], 1.0, 4096, 3, Split::Test, 2).unwrap();
        assert_eq!(set.units.len(), counts.len());
        assert!(set.units.iter().all(|u| u.len() == 4096));
    }

    #[test]
    fn rejects_bad_block_size() {
        let room = grid_room(1.0, 1.0, 0.5);
        assert!(matches!(
            make_block_units(&[room], 0.0, 4096, 0, Split::Train, 1),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn deterministic() {
        let rooms = vec![grid_room(2.0, 2.0, 0.01), grid_room(1.0, 3.0, 0.02)];
        let a = make_block_units(&rooms, 1.0, 4096, 5, Split::Train, 1).unwrap();
        let b = make_block_units(&rooms, 1.0, 4096, 5, Split::Train, 1).unwrap();
        assert_eq!(a.units, b.units);
    }
}
