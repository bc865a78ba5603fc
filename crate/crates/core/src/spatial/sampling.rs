use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

use super::{dist2, seeded_rng};

/// Sampling ratio and seed for one subsampling step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSpec {
    pub ratio: f64,
    pub seed: u64,
}

impl SampleSpec {
    pub fn new(ratio: f64, seed: u64) -> Result<Self> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::argument(format!("sample ratio {ratio} outside (0, 1]")));
        }
        Ok(Self { ratio, seed })
    }

    /// `max(1, round(ratio * n))`.
    pub fn sample_size(&self, n: usize) -> usize {
        ((self.ratio * n as f64).round() as usize).clamp(1, n.max(1))
    }
}

/// Uniformly chooses `spec.sample_size(n)` distinct indices from `0..n`
/// with a seeded partial Fisher-Yates shuffle.
pub fn random_sample(n: usize, spec: SampleSpec) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::argument("cannot sample from zero points"));
    }
    let spec = SampleSpec::new(spec.ratio, spec.seed)?;
    let m = spec.sample_size(n);
    let mut rng = seeded_rng(spec.seed, 0);
    let mut pool: Vec<usize> = (0..n).collect();
    let (chosen, _) = pool.partial_shuffle(&mut rng, m);
    Ok(chosen.to_vec())
}

/// Greedy max-min selection starting from a seeded random point.
pub fn farthest_point_sample(positions: &[[f64; 3]], count: usize, seed: u64) -> Result<Vec<usize>> {
    if positions.is_empty() {
        return Err(Error::argument("cannot sample from zero points"));
    }
    let start = seeded_rng(seed, 0).random_range(0..positions.len());
    farthest_point_sample_from(positions, count, start)
}

/// Greedy max-min selection from a fixed start point. Each pick maximizes
/// the distance to the already-picked set; ties go to the lower index.
pub fn farthest_point_sample_from(
    positions: &[[f64; 3]],
    count: usize,
    start: usize,
) -> Result<Vec<usize>> {
    let n = positions.len();
    if count > n {
        return Err(Error::argument(format!("cannot pick {count} of {n} points")));
    }
    if start >= n {
        return Err(Error::argument(format!("start index {start} out of range")));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut picked = Vec::with_capacity(count);
    let mut min_d = vec![f64::INFINITY; n];
    let mut current = start;
    for _ in 0..count {
        picked.push(current);
        let anchor = positions[current];
        let mut next = 0;
        let mut next_d = f64::NEG_INFINITY;
        for (i, p) in positions.iter().enumerate() {
            let d = dist2(&anchor, p);
            if d < min_d[i] {
                min_d[i] = d;
            }
            if min_d[i] > next_d {
                next_d = min_d[i];
                next = i;
            }
        }
        current = next;
    }
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};
    use std::collections::HashSet;

    #[test]
    fn quarter_of_eight_is_two() {
        for seed in 0..20 {
            let s = random_sample(8, SampleSpec::new(0.25, seed).unwrap()).unwrap();
            assert_eq!(s.len(), 2);
            assert_ne!(s[0], s[1]);
            assert!(s.iter().all(|&i| i < 8));
        }
    }

    #[test]
    fn full_ratio_covers_everything() {
        let s = random_sample(5, SampleSpec { ratio: 1.0, seed: 3 }).unwrap();
        let set: HashSet<_> = s.into_iter().collect();
        assert_eq!(set, (0..5).collect());
    }

    #[test]
    fn same_seed_same_sample() {
        let spec = SampleSpec { ratio: 0.3, seed: 77 };
        assert_eq!(random_sample(1000, spec).unwrap(), random_sample(1000, spec).unwrap());
        let other = SampleSpec { ratio: 0.3, seed: 78 };
        assert_ne!(random_sample(1000, spec).unwrap(), random_sample(1000, other).unwrap());
    }

    #[test]
    fn bad_ratio() {
        for r in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(
                random_sample(4, SampleSpec { ratio: r, seed: 0 }),
                Err(Error::Argument(_))
            ));
        }
        assert!(random_sample(0, SampleSpec { ratio: 0.5, seed: 0 }).is_err());
    }

    #[test]
    fn tiny_ratio_keeps_one() {
        assert_eq!(random_sample(3, SampleSpec { ratio: 0.01, seed: 1 }).unwrap().len(), 1);
    }

    #[test]
    fn fps_two_points() {
        let pts = [[0.0; 3], [1.0, 0.0, 0.0]];
        let mut s = farthest_point_sample(&pts, 2, 5).unwrap();
        s.sort();
        assert_eq!(s, vec![0, 1]);
    }

    #[test]
    fn fps_square_picks_diagonal() {
        let pts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
        assert_eq!(farthest_point_sample_from(&pts, 2, 0).unwrap(), vec![0, 3]);
    }

    #[test]
    fn fps_count_too_large() {
        assert!(matches!(
            farthest_point_sample(&[[0.0; 3]], 2, 0),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn fps_each_pick_is_max_min() {
        let mut rng = seeded_rng(12, 0);
        let pts: Vec<[f64; 3]> = (0..50)
            .map(|_| [rng.random(), rng.random(), rng.random()])
            .collect();
        let picks = farthest_point_sample(&pts, 20, 99).unwrap();
        assert_eq!(picks, farthest_point_sample(&pts, 20, 99).unwrap());
        // re-evaluate every step from scratch
        for step in 1..picks.len() {
            let chosen = &picks[..step];
            let score = |i: usize| {
                chosen
                    .iter()
                    .map(|&c| {
                        let d: f64 = (0..3).map(|a| (pts[i][a] - pts[c][a]).powi(2)).sum();
                        d
                    })
                    .fold(f64::INFINITY, f64::min)
            };
            let best = (0..pts.len()).map(score).fold(f64::NEG_INFINITY, f64::max);
            assert!((score(picks[step]) - best).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn sample_is_unique_and_in_range(n in 1usize..5000, ratio in 0.0001f64..=1.0, seed in any::<u64>()) {
            let spec = SampleSpec::new(ratio, seed).unwrap();
            let s = random_sample(n, spec).unwrap();
            prop_assert_eq!(s.len(), spec.sample_size(n));
            prop_assert!(s.iter().all(|&i| i < n));
            let set: HashSet<_> = s.iter().collect();
            prop_assert_eq!(set.len(), s.len());
        }
    }
}
