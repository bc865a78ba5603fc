//! End-to-end runs: room units, attributes, hop features, boosted trees and
//! evaluation on held-out rooms.

use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::attributes::{build_attributes, DEFAULT_K_LOCAL};
use crate::classifier::{Classifier, GbdtConfig, TrainSet, Trainer};
use crate::cloud::{PointCloud, Split, UnitSet};
use crate::error::{Error, Result};
use crate::evaluation::{aggregate_folds, ConfusionMatrix, EvalReport, IouPolicy};
use crate::extractor::{extract, fit_params, quantize_features, ExtractorParams, HopConfig};
use crate::io::{list_files, read_room_file, stem_of, Precision, AREA_COUNT};
use crate::matrix::Matrix;
use crate::preprocess::{make_room_units, DEFAULT_GRID_SIZE};
use crate::spatial::seeded_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub grid_size: f64,
    pub k_local: usize,
    pub hops: HopConfig,
    pub gbdt: GbdtConfig,
    pub precision: Precision,
    pub iou_policy: IouPolicy,
    /// Fraction of training points per unit handed to the classifier.
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            grid_size: DEFAULT_GRID_SIZE,
            k_local: DEFAULT_K_LOCAL,
            hops: HopConfig::default(),
            gbdt: GbdtConfig::default(),
            precision: Precision::F32,
            iou_policy: IouPolicy::default(),
            train_fraction: 1.0,
            seed: 0,
        }
    }
}

/// Room-style units with attributes attached.
pub fn prepare_units(
    rooms: &[PointCloud],
    cfg: &PipelineConfig,
    split: Split,
    fold: u8,
) -> Result<UnitSet> {
    let mut set = make_room_units(rooms, cfg.grid_size, cfg.seed, split, fold)?;
    set.units = set
        .units
        .par_iter()
        .map(|u| build_attributes(u, cfg.k_local))
        .collect::<Result<_>>()?;
    Ok(set)
}

/// Hop features of every unit, rounded to the configured precision.
pub fn extract_all(
    units: &[PointCloud],
    hops: &HopConfig,
    params: &ExtractorParams,
    precision: Precision,
) -> Result<Vec<Matrix>> {
    units
        .par_iter()
        .map(|u| quantize_features(&extract(u, hops, params)?, precision))
        .collect()
}

/// Stacks labeled rows, keeping `fraction` of each unit's points.
pub fn training_rows(
    units: &[PointCloud],
    features: &[Matrix],
    fraction: f64,
    seed: u64,
) -> Result<TrainSet> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::argument("train fraction must be in (0, 1]"));
    }
    let parts = units
        .iter()
        .zip(features)
        .enumerate()
        .map(|(i, (u, f))| {
            let labels = u
                .labels()
                .ok_or_else(|| Error::state(format!("unit {} has no labels", u.unit_id())))?;
            if fraction == 1.0 {
                return TrainSet::new(f.clone(), labels.to_vec());
            }
            let n = u.len();
            let keep = ((fraction * n as f64).round() as usize).clamp(1, n);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.partial_shuffle(&mut seeded_rng(seed, i as u64), keep);
            idx.truncate(keep);
            idx.sort_unstable();
            TrainSet::new(
                f.select_rows(&idx),
                idx.iter().map(|&k| labels[k]).collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    TrainSet::concat(parts)
}

/// Everything produced by one train/test run.
#[derive(Debug, Clone)]
pub struct SplitOutcome<M> {
    pub params: ExtractorParams,
    pub model: M,
    pub test_units: Vec<PointCloud>,
    pub test_features: Vec<Matrix>,
    pub predictions: Vec<Vec<u8>>,
    pub confusion: ConfusionMatrix,
    pub report: EvalReport,
}

/// Trains on `train_rooms` and evaluates on the downsampled points of
/// `test_rooms`.
pub fn run_split<T: Trainer>(
    train_rooms: &[PointCloud],
    test_rooms: &[PointCloud],
    cfg: &PipelineConfig,
    trainer: &T,
    fold: Option<u8>,
) -> Result<SplitOutcome<T::Model>> {
    let fold_id = fold.unwrap_or(0);
    let train = prepare_units(train_rooms, cfg, Split::Train, fold_id)?;
    let test = prepare_units(test_rooms, cfg, Split::Test, fold_id)?;
    log::info!(
        "{} train units ({} points), {} test units ({} points)",
        train.units.len(),
        train.total_points(),
        test.units.len(),
        test.total_points()
    );
    let refs: Vec<&PointCloud> = train.units.iter().collect();
    let params = fit_params(&refs, &cfg.hops)?;
    let train_feats = extract_all(&train.units, &cfg.hops, &params, cfg.precision)?;
    let set = training_rows(&train.units, &train_feats, cfg.train_fraction, cfg.seed)?;
    drop(train_feats);
    log::info!("training on {} rows x {} features", set.len(), set.features().cols());
    let model = trainer.fit(&set)?;
    drop(set);

    let test_features = extract_all(&test.units, &cfg.hops, &params, cfg.precision)?;
    let mut confusion = ConfusionMatrix::new(model.num_classes());
    let mut predictions = Vec::with_capacity(test.units.len());
    for (u, f) in test.units.iter().zip(&test_features) {
        let pred = model.predict(f)?;
        let truth = u
            .labels()
            .ok_or_else(|| Error::state(format!("test unit {} has no labels", u.unit_id())))?;
        confusion.accumulate(truth, &pred)?;
        predictions.push(pred);
    }
    let report = EvalReport::from_confusion(&confusion, fold, cfg.iou_policy)?;
    Ok(SplitOutcome {
        params,
        model,
        test_units: test.units,
        test_features,
        predictions,
        confusion,
        report,
    })
}

/// Labeled rooms of `root/Area_<area>/*.txt`, with unit ids
/// `Area_<area>_<room>`.
pub fn load_area(root: &Path, area: u8) -> Result<Vec<PointCloud>> {
    let dir = root.join(format!("Area_{area}"));
    let files = list_files(&dir, ".txt")?;
    if files.is_empty() {
        return Err(Error::EmptyInput(format!("no rooms in {}", dir.display())));
    }
    files
        .par_iter()
        .map(|p| {
            let mut room = read_room_file(p)?;
            if room.labels().is_none() {
                return Err(Error::state(format!("{} has no labels", p.display())));
            }
            room.set_unit_id(format!("Area_{area}_{}", stem_of(p, ".txt")));
            Ok(room)
        })
        .collect()
}

/// Held-out evaluation of `test_area` after training on the other areas.
pub fn run_fold(root: &Path, test_area: u8, cfg: &PipelineConfig) -> Result<SplitOutcome<crate::classifier::GbdtModel>> {
    if !(1..=AREA_COUNT).contains(&test_area) {
        return Err(Error::argument(format!("test area {test_area} outside 1..={AREA_COUNT}")));
    }
    let mut train = Vec::new();
    for area in (1..=AREA_COUNT).filter(|a| *a != test_area) {
        train.extend(load_area(root, area)?);
    }
    let test = load_area(root, test_area)?;
    run_split(&train, &test, cfg, &cfg.gbdt, Some(test_area))
}

/// Runs the listed folds and averages them.
pub fn cross_validate(
    root: &Path,
    folds: &[u8],
    cfg: &PipelineConfig,
) -> Result<(Vec<EvalReport>, EvalReport)> {
    let mut reports = Vec::with_capacity(folds.len());
    for &f in folds {
        let out = run_fold(root, f, cfg)?;
        log::info!("fold {f}: mIoU {:.3} OA {:.3}", out.report.miou, out.report.oa);
        reports.push(out.report);
    }
    let mean = aggregate_folds(&reports)?;
    Ok((reports, mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{generate_rooms, SceneConfig};

    fn small_cfg() -> PipelineConfig {
        PipelineConfig {
            grid_size: 0.2,
            hops: HopConfig {
                k_neighbors: 16,
                ..HopConfig::default()
            },
            gbdt: GbdtConfig {
                num_trees: 26,
                allow_absent_classes: true,
                ..GbdtConfig::default()
            },
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn small_synthetic_split() {
        let scene = SceneConfig {
            spacing: 0.1,
            ..SceneConfig::default()
        };
        let rooms = generate_rooms(&scene, 5, 4).unwrap();
        let out = run_split(&rooms[..3], &rooms[3..], &small_cfg(), &small_cfg().gbdt, Some(1)).unwrap();
        assert_eq!(out.predictions.len(), 1);
        assert_eq!(out.predictions[0].len(), out.test_units[0].len());
        assert_eq!(out.test_features[0].cols(), 205);
        assert_eq!(out.report.points as usize, out.test_units[0].len());
        assert!(out.report.oa > 0.8, "oa {}", out.report.oa);
    }

    #[test]
    fn training_rows_fraction() {
        let u = PointCloud::new(
            "u",
            (0..10).map(|i| [i as f64, 0.0, 0.0]).collect(),
            vec![[0; 3]; 10],
            Some((0..10).map(|i| (i % 2) as u8).collect()),
        )
        .unwrap();
        let f = Matrix::from_vec(10, 1, (0..10).map(|i| i as f64).collect()).unwrap();
        let s = training_rows(std::slice::from_ref(&u), std::slice::from_ref(&f), 0.5, 1).unwrap();
        assert_eq!(s.len(), 5);
        for (row, l) in s.features().iter_rows().zip(s.labels()) {
            assert_eq!(row[0] as u8 % 2, *l);
        }
        assert!(training_rows(&[u], &[f], 0.0, 1).is_err());
    }

    #[test]
    fn area_loading() {
        let dir = tempfile::tempdir().unwrap();
        let area = dir.path().join("Area_2");
        std::fs::create_dir_all(&area).unwrap();
        std::fs::write(area.join("office_1.txt"), "0 0 0 1 2 3 4\n1 1 1 1 2 3 5\n").unwrap();
        let rooms = load_area(dir.path(), 2).unwrap();
        assert_eq!(rooms[0].unit_id(), "Area_2_office_1");
        assert!(load_area(dir.path(), 3).is_err());
        std::fs::write(area.join("bad.txt"), "0 0 0 1 2 3\n").unwrap();
        assert!(load_area(dir.path(), 2).is_err());
        assert!(run_fold(dir.path(), 7, &PipelineConfig::default()).is_err());
    }
}
