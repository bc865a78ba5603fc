use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use greenseg_core::attributes::{build_attributes, DEFAULT_K_LOCAL};
use greenseg_core::classes::{class_id, CLASS_NAMES};
use greenseg_core::classifier::{load_model, save_model, Classifier, GbdtConfig, TrainSet};
use greenseg_core::cloud::{PointCloud, Split, UnitSet};
use greenseg_core::evaluation::{
    export_colored_cloud, format_table, report_json, ConfusionMatrix, EvalReport, IouPolicy,
};
use greenseg_core::extractor::{extract, fit_params, quantize_features, ExtractorParams, HopConfig};
use greenseg_core::io::{
    convert_dataset, read_feature_file, read_label_file, read_room_file, write_features,
    write_label_file, write_room_file, Precision, AREA_COUNT,
};
use greenseg_core::pipeline::{cross_validate, load_area, PipelineConfig};
use greenseg_core::preprocess::{
    make_block_units, make_room_units, make_view_units, room_seed, stats_from_sizes, voxel_downsample,
    ViewConfig, BLOCK_UNIT_POINTS, VIEW_UNIT_POINTS,
};
use greenseg_core::synthetic::{generate_rooms, SceneConfig};
use log::info;
use serde_json::json;

use crate::layout::*;
use crate::{PolicyArg, PrecisionArg, StyleArg};

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::F32 => Precision::F32,
            PrecisionArg::F16 => Precision::F16,
        }
    }
}

impl From<PolicyArg> for IouPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Skip => IouPolicy::SkipAbsent,
            PolicyArg::Zero => IouPolicy::CountAsZero,
        }
    }
}

pub fn convert(root: &Path, out: &Path) -> Result<()> {
    let written = convert_dataset(root, out)?;
    info!("wrote {} rooms under {}", written.len(), out.display());
    Ok(())
}

pub fn synth(out: &Path, rooms: usize, areas: u8, spacing: f64, seed: u64) -> Result<()> {
    if rooms == 0 || areas == 0 {
        bail!("need at least one room and one area");
    }
    let cfg = SceneConfig {
        spacing,
        ..SceneConfig::default()
    };
    let all = generate_rooms(&cfg, seed, rooms * areas as usize)?;
    for (a, chunk) in all.chunks(rooms).enumerate() {
        let dir = out.join(format!("Area_{}", a + 1));
        ensure_dir(&dir)?;
        for room in chunk {
            write_room_file(room, &dir.join(format!("{}{ROOM_EXT}", room.unit_id())))?;
        }
    }
    info!("wrote {} synthetic rooms in {areas} areas", all.len());
    Ok(())
}

pub struct PreprocessArgs {
    pub style: StyleArg,
    pub grid: f64,
    pub test_area: u8,
    pub seed: u64,
    pub input: PathBuf,
    pub out: PathBuf,
    pub block_size: f64,
    pub unit_points: Option<usize>,
    pub view_units: Option<usize>,
}

fn unitize(rooms: &[PointCloud], a: &PreprocessArgs, split: Split) -> Result<UnitSet> {
    let set = match a.style {
        StyleArg::Room => make_room_units(rooms, a.grid, a.seed, split, a.test_area)?,
        StyleArg::Block => {
            // blocks are cut from the downsampled room
            let down = rooms
                .iter()
                .enumerate()
                .map(|(i, r)| voxel_downsample(r, a.grid, room_seed(a.seed, i)))
                .collect::<greenseg_core::Result<Vec<_>>>()?;
            make_block_units(
                &down,
                a.block_size,
                a.unit_points.unwrap_or(BLOCK_UNIT_POINTS),
                a.seed,
                split,
                a.test_area,
            )?
        }
        StyleArg::View => {
            let unit_size = a.unit_points.unwrap_or(VIEW_UNIT_POINTS);
            let target_units = match a.view_units {
                Some(n) => n,
                None => {
                    let mut total = 0;
                    for (i, r) in rooms.iter().enumerate() {
                        total += voxel_downsample(r, a.grid, room_seed(a.seed, i))?.len();
                    }
                    total.div_ceil(unit_size).max(1)
                }
            };
            let cfg = ViewConfig {
                unit_size,
                target_units,
                grid_size: a.grid,
                ..ViewConfig::default()
            };
            make_view_units(rooms, &cfg, a.seed, split, a.test_area)?
        }
    };
    Ok(set)
}

pub fn preprocess(a: PreprocessArgs) -> Result<()> {
    if !(1..=AREA_COUNT).contains(&a.test_area) {
        bail!("test area {} outside 1..={AREA_COUNT}", a.test_area);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for area in 1..=AREA_COUNT {
        if !a.input.join(format!("Area_{area}")).is_dir() {
            continue;
        }
        let rooms = load_area(&a.input, area)?;
        if area == a.test_area {
            test = rooms;
        } else {
            train.extend(rooms);
        }
    }
    if train.is_empty() || test.is_empty() {
        bail!(
            "need rooms in Area_{} and in at least one other area under {}",
            a.test_area,
            a.input.display()
        );
    }
    let mut manifest = serde_json::Map::new();
    for (split, rooms) in [(Split::Train, &train), (Split::Test, &test)] {
        let name = SPLITS[split as usize];
        let set = unitize(rooms, &a, split)?;
        let dir = a.out.join(name);
        ensure_dir(&dir)?;
        for u in &set.units {
            write_room_file(u, &dir.join(format!("{}{ROOM_EXT}", u.unit_id())))?;
        }
        let stats = stats_from_sizes(set.units.iter().map(|u| u.len()))?;
        info!("{name}: {stats}");
        manifest.insert(
            name.into(),
            json!({ "rooms": rooms.len(), "stats": stats }),
        );
    }
    manifest.insert(
        "style".into(),
        json!(match a.style {
            StyleArg::Block => "block",
            StyleArg::View => "view",
            StyleArg::Room => "room",
        }),
    );
    manifest.insert("grid".into(), json!(a.grid));
    manifest.insert("test_area".into(), json!(a.test_area));
    manifest.insert("seed".into(), json!(a.seed));
    let f = File::create(a.out.join("manifest.json"))?;
    serde_json::to_writer_pretty(BufWriter::new(f), &manifest)?;
    Ok(())
}

pub fn stats(input: &Path) -> Result<()> {
    for (name, dir) in splits(input) {
        let mut sizes = Vec::new();
        for (_, path) in unit_files(&dir, ROOM_EXT)? {
            sizes.push(read_room_file(&path)?.len());
        }
        let s = stats_from_sizes(sizes)?;
        let name = if name.is_empty() { "all" } else { name };
        println!("{name:<6}{s}");
        print!("{}", s.key_values(name));
    }
    Ok(())
}

pub fn attributes(input: &Path, out: &Path, k_local: usize) -> Result<()> {
    for (name, dir) in splits(input) {
        let out_dir = out.join(name);
        ensure_dir(&out_dir)?;
        let units = unit_files(&dir, ROOM_EXT)?;
        for (unit, path) in &units {
            let mut cloud = read_room_file(path)?;
            cloud.set_unit_id(unit.as_str());
            let mut with = build_attributes(&cloud, k_local)
                .with_context(|| format!("attributes of {unit}"))?;
            let attrs = with.take_attributes().expect("attributes were just built");
            write_room_file(&with, &out_dir.join(format!("{unit}{ROOM_EXT}")))?;
            let mut w = BufWriter::new(File::create(out_dir.join(format!("{unit}{ATTR_EXT}")))?);
            write_features(&attrs, Precision::F32, &mut w)?;
        }
        info!("{}: attributes of {} units", dir.display(), units.len());
    }
    Ok(())
}

/// Units of `dir` with attributes: read from `.attr` files when present,
/// computed otherwise.
fn load_units(dir: &Path) -> Result<Vec<PointCloud>> {
    let mut units = Vec::new();
    for (unit, path) in unit_files(dir, ROOM_EXT)? {
        let mut cloud = read_room_file(&path)?;
        cloud.set_unit_id(unit.as_str());
        let attr = dir.join(format!("{unit}{ATTR_EXT}"));
        let cloud = if attr.is_file() {
            cloud.with_attributes(read_feature_file(&attr)?)?
        } else {
            build_attributes(&cloud, DEFAULT_K_LOCAL)?
        };
        units.push(cloud);
    }
    if units.is_empty() {
        bail!("no {ROOM_EXT} units in {}", dir.display());
    }
    Ok(units)
}

pub struct ExtractArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    pub hops: usize,
    pub k: usize,
    pub ratios: Vec<f64>,
    pub precision: PrecisionArg,
    pub seed: u64,
    pub params: PathBuf,
}

pub fn extract_features(a: ExtractArgs) -> Result<()> {
    if a.ratios.len() != a.hops {
        bail!("{} sampling ratios given for {} hops", a.ratios.len(), a.hops);
    }
    let config = HopConfig {
        k_neighbors: a.k,
        sample_ratios: a.ratios.clone(),
        seed: a.seed,
        ..HopConfig::default()
    };
    config.validate()?;
    let precision = Precision::from(a.precision);
    let layout = splits(&a.input);
    let mut loaded = Vec::new();
    for (name, dir) in &layout {
        loaded.push((*name, load_units(dir)?));
    }

    // fit on train/ when there is one, otherwise reuse saved statistics
    let fit_on = match loaded.iter().find(|(n, _)| *n == "train") {
        Some((_, units)) => Some(units),
        None if a.params.is_file() => None,
        None => Some(&loaded[0].1),
    };
    let params = match fit_on {
        Some(units) => {
            let refs: Vec<&PointCloud> = units.iter().collect();
            let p = fit_params(&refs, &config)?;
            p.save(&a.params)?;
            info!("fitted standardization on {} units -> {}", refs.len(), a.params.display());
            p
        }
        None => {
            info!("using standardization from {}", a.params.display());
            ExtractorParams::load(&a.params)?
        }
    };
    if params.hops.len() != a.hops {
        bail!("{} holds {} hops, expected {}", a.params.display(), params.hops.len(), a.hops);
    }

    for (name, units) in &loaded {
        let out_dir = a.out.join(name);
        ensure_dir(&out_dir)?;
        let start = Instant::now();
        for u in units {
            let f = quantize_features(&extract(u, &config, &params)?, precision)?;
            let mut w = BufWriter::new(File::create(out_dir.join(format!("{}{FEAT_EXT}", u.unit_id())))?);
            write_features(&f, precision, &mut w)?;
            if let Some(l) = u.labels() {
                write_label_file(l, &out_dir.join(format!("{}{LABEL_EXT}", u.unit_id())))?;
            }
        }
        info!(
            "{}: {} units in {:.1}s",
            out_dir.display(),
            units.len(),
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}

pub struct TrainArgs {
    pub features: PathBuf,
    pub out: PathBuf,
    pub trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub exact: bool,
    pub class_weights: bool,
    pub allow_absent_classes: bool,
}

pub fn train(a: TrainArgs) -> Result<()> {
    let dir = if a.features.join("train").is_dir() {
        a.features.join("train")
    } else {
        a.features.clone()
    };
    let mut parts = Vec::new();
    for (unit, path) in unit_files(&dir, FEAT_EXT)? {
        let features = read_feature_file(&path)?;
        let label_path = dir.join(format!("{unit}{LABEL_EXT}"));
        let labels = read_label_file(&label_path)
            .with_context(|| format!("reading {}", label_path.display()))?;
        parts.push(TrainSet::new(features, labels).with_context(|| format!("unit {unit}"))?);
    }
    if parts.is_empty() {
        bail!("no {FEAT_EXT} files in {}", dir.display());
    }
    let set = TrainSet::concat(parts)?;
    let cfg = GbdtConfig {
        num_trees: a.trees,
        max_depth: a.max_depth,
        learning_rate: a.learning_rate,
        seed: a.seed,
        exact: a.exact,
        class_weighting: a.class_weights,
        allow_absent_classes: a.allow_absent_classes,
        ..GbdtConfig::default()
    };
    info!("training on {} rows x {} features", set.len(), set.features().cols());
    let start = Instant::now();
    let (model, log) = cfg.fit_with_log(&set)?;
    if let (Some(first), Some(last)) = (log.losses.first(), log.losses.last()) {
        info!(
            "{} rounds, loss {first:.4} -> {last:.4}, {:.1}s",
            log.losses.len(),
            start.elapsed().as_secs_f64()
        );
    }
    info!(
        "{} trees, {} parameters",
        model.trees().len(),
        model.count_parameters()
    );
    save_model(&model, &a.out)?;
    Ok(())
}

pub fn predict(model: &Path, features: &Path, out: &Path) -> Result<()> {
    let model = load_model(model).with_context(|| format!("loading {}", model.display()))?;
    for (name, dir) in splits(features) {
        let files = unit_files(&dir, FEAT_EXT)?;
        if files.is_empty() {
            continue;
        }
        let out_dir = out.join(name);
        ensure_dir(&out_dir)?;
        for (unit, path) in &files {
            let pred = model
                .predict(&read_feature_file(path)?)
                .with_context(|| format!("predicting {unit}"))?;
            write_label_file(&pred, &out_dir.join(format!("{unit}{LABEL_EXT}")))?;
        }
        info!("{}: {} units labeled", out_dir.display(), files.len());
    }
    Ok(())
}

fn write_reports(reports: &[EvalReport], mean: Option<&EvalReport>, report: Option<&Path>, json_path: Option<&Path>) -> Result<()> {
    let mut rows = reports.to_vec();
    rows.extend(mean.cloned());
    let table = format_table(&rows);
    print!("{table}");
    if let Some(p) = report {
        std::fs::write(p, &table).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = json_path {
        let f = File::create(p).with_context(|| format!("writing {}", p.display()))?;
        serde_json::to_writer_pretty(BufWriter::new(f), &report_json(reports, mean))?;
    }
    Ok(())
}

pub fn eval(
    pred: &Path,
    truth: &Path,
    report: Option<&Path>,
    json_path: Option<&Path>,
    fold: Option<u8>,
    policy: PolicyArg,
) -> Result<()> {
    let mut files = Vec::new();
    for (_, dir) in splits(pred) {
        files.extend(unit_files(&dir, LABEL_EXT)?);
    }
    if files.is_empty() {
        bail!("no {LABEL_EXT} files under {}", pred.display());
    }
    let mut cm = ConfusionMatrix::default();
    for (unit, path) in &files {
        let p = read_label_file(path)?;
        let t = find_truth(truth, unit)?;
        cm.accumulate(&t, &p).with_context(|| format!("unit {unit}"))?;
    }
    let r = EvalReport::from_confusion(&cm, fold, policy.into())?;
    info!("{} units, {} points", files.len(), r.points);
    write_reports(&[r], None, report, json_path)
}

pub struct CrossvalArgs {
    pub data: PathBuf,
    pub folds: u8,
    pub grid: f64,
    pub k: usize,
    pub trees: usize,
    pub precision: PrecisionArg,
    pub seed: u64,
    pub train_fraction: f64,
    pub allow_absent_classes: bool,
    pub policy: PolicyArg,
    pub report: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

pub fn crossval(a: CrossvalArgs) -> Result<()> {
    if !(1..=AREA_COUNT).contains(&a.folds) {
        bail!("fold count must be in 1..={AREA_COUNT}");
    }
    let cfg = PipelineConfig {
        grid_size: a.grid,
        hops: HopConfig {
            k_neighbors: a.k,
            seed: a.seed,
            ..HopConfig::default()
        },
        gbdt: GbdtConfig {
            num_trees: a.trees,
            seed: a.seed,
            allow_absent_classes: a.allow_absent_classes,
            ..GbdtConfig::default()
        },
        precision: a.precision.into(),
        iou_policy: a.policy.into(),
        train_fraction: a.train_fraction,
        seed: a.seed,
        ..PipelineConfig::default()
    };
    let folds: Vec<u8> = (1..=a.folds).collect();
    let (reports, mean) = cross_validate(&a.data, &folds, &cfg)?;
    write_reports(&reports, Some(&mean), a.report.as_deref(), a.json.as_deref())
}

pub fn visualize(input: &Path, out: &Path, labels: Option<&Path>, drop_class: Option<&str>) -> Result<()> {
    let cloud = read_room_file(input)?;
    let labels = match labels {
        Some(p) => read_label_file(p)?,
        None => cloud
            .labels()
            .ok_or_else(|| anyhow!("{} has no labels; pass --labels", input.display()))?
            .to_vec(),
    };
    let drop = drop_class
        .map(|name| {
            class_id(name).ok_or_else(|| {
                anyhow!("unknown class {name:?}; expected one of {}", CLASS_NAMES.join(", "))
            })
        })
        .transpose()?;
    let n = export_colored_cloud(&cloud, &labels, out, drop)?;
    info!("wrote {n} colored points to {}", out.display());
    Ok(())
}
