use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::classes::NUM_CLASSES;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spatial::seeded_rng;

use super::binning::{BinIndex, BinnedMatrix};
use super::tree::{Node, Tree};
use super::{
    Classifier, TrainSet, Trainer, DEFAULT_HIST_BINS, DEFAULT_LAMBDA,
    DEFAULT_LEARNING_RATE, DEFAULT_MAX_DEPTH, DEFAULT_NUM_TREES,
};

const MIN_HESSIAN: f64 = 1e-16;
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GbdtConfig {
    /// Total tree budget across all classes.
    pub num_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    /// Minimum loss reduction for a split.
    pub gamma: f64,
    pub min_child_weight: f64,
    /// Histogram bins per feature (at most 256).
    pub max_bins: usize,
    /// Use every distinct value as a candidate threshold, up to 65536 per
    /// feature, instead of histogram bins.
    pub exact: bool,
    /// Inverse-frequency sample weights.
    pub class_weighting: bool,
    pub allow_absent_classes: bool,
    pub num_classes: usize,
    /// Fraction of rows drawn (without replacement) for each round.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        Self {
            num_trees: DEFAULT_NUM_TREES,
            max_depth: DEFAULT_MAX_DEPTH,
            learning_rate: DEFAULT_LEARNING_RATE,
            lambda: DEFAULT_LAMBDA,
            gamma: 0.0,
            min_child_weight: 1.0,
            max_bins: DEFAULT_HIST_BINS,
            exact: false,
            class_weighting: true,
            allow_absent_classes: false,
            num_classes: NUM_CLASSES,
            subsample: 1.0,
            seed: 0,
        }
    }
}

/// Weighted training log-loss before the first round and after each round.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub losses: Vec<f64>,
}

impl TrainingLog {
    pub fn is_monotone(&self) -> bool {
        self.losses.windows(2).all(|w| w[1] <= w[0])
    }
}

/// `T / (C * count_c)` per class; 0 for classes without samples.
pub fn class_weights(labels: &[u8], num_classes: usize) -> Vec<f64> {
    let mut counts = vec![0usize; num_classes];
    for &l in labels {
        counts[l as usize] += 1;
    }
    let t = labels.len() as f64;
    counts
        .iter()
        .map(|&c| {
            if c == 0 {
                0.0
            } else {
                t / (num_classes as f64 * c as f64)
            }
        })
        .collect()
}

impl GbdtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 || self.num_classes > 256 {
            return Err(Error::argument("num_classes must be in 2..=256"));
        }
        if self.max_depth == 0 || self.max_depth > 31 {
            return Err(Error::argument("max_depth must be in 1..=31"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::argument("learning_rate must be positive"));
        }
        if !(self.lambda >= 0.0 && self.gamma >= 0.0 && self.min_child_weight >= 0.0) {
            return Err(Error::argument("lambda, gamma and min_child_weight must be >= 0"));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::argument("subsample must be in (0, 1]"));
        }
        if !self.exact && !(2..=256).contains(&self.max_bins) {
            return Err(Error::argument("max_bins must be in 2..=256"));
        }
        Ok(())
    }

    /// Boosting rounds needed for the tree budget when `active` classes
    /// get trees.
    pub fn rounds(&self, active: usize) -> usize {
        self.num_trees.div_ceil(active.max(1))
    }

    pub fn fit_with_log(&self, set: &TrainSet) -> Result<(GbdtModel, TrainingLog)> {
        self.validate()?;
        if set.is_empty() {
            return Err(Error::argument("empty training set"));
        }
        if let Some(l) = set.labels().iter().find(|&&l| l as usize >= self.num_classes) {
            return Err(Error::argument(format!(
                "label {l} but only {} classes",
                self.num_classes
            )));
        }
        let weights = class_weights(set.labels(), self.num_classes);
        if !self.allow_absent_classes {
            if let Some(c) = weights.iter().position(|w| *w == 0.0) {
                return Err(Error::argument(format!("class {c} has no training samples")));
            }
        }
        if self.exact {
            let binned = BinnedMatrix::<u16>::build(set.features(), u16::CAPACITY)?;
            self.boost(set, &binned, weights)
        } else {
            let binned = BinnedMatrix::<u8>::build(set.features(), self.max_bins)?;
            self.boost(set, &binned, weights)
        }
    }

    fn boost<B: BinIndex>(
        &self,
        set: &TrainSet,
        binned: &BinnedMatrix<B>,
        class_w: Vec<f64>,
    ) -> Result<(GbdtModel, TrainingLog)> {
        let t = set.len();
        let nc = self.num_classes;
        let labels = set.labels();
        let features = set.features();
        let sample_w: Vec<f64> = labels
            .iter()
            .map(|&l| {
                if self.class_weighting {
                    class_w[l as usize]
                } else {
                    1.0
                }
            })
            .collect();
        // classes without samples get no trees and never enter the softmax
        let active: Vec<usize> = (0..nc).filter(|&c| class_w[c] > 0.0).collect();
        let mut margins = vec![0.0f64; t * nc];
        let mut trees = Vec::with_capacity(self.num_trees);
        let mut log = TrainingLog {
            losses: vec![weighted_loss(&margins, labels, &sample_w, &class_w)],
        };
        let mut g = vec![0.0; t];
        let mut h = vec![0.0; t];

        for round in 0..self.rounds(active.len()) {
            let mut probs = margins.clone();
            probs
                .par_chunks_mut(nc)
                .for_each(|p| masked_softmax(p, &class_w));
            let rows = self.round_rows(t, round as u64);
            for &c in &active {
                if trees.len() == self.num_trees {
                    break;
                }
                for i in 0..t {
                    let p = probs[i * nc + c];
                    let y = if labels[i] as usize == c { 1.0 } else { 0.0 };
                    g[i] = sample_w[i] * (p - y);
                    h[i] = sample_w[i] * (2.0 * p * (1.0 - p)).max(MIN_HESSIAN);
                }
                let tree = TreeBuilder::new(self, binned, &g, &h).build(c as u32, rows.clone())?;
                margins
                    .par_chunks_mut(nc)
                    .enumerate()
                    .for_each(|(i, m)| m[c] += tree.predict_row(features.row(i)) as f64);
                trees.push(tree);
            }
            let loss = weighted_loss(&margins, labels, &sample_w, &class_w);
            log::debug!("round {round}: {} trees, loss {loss:.6}", trees.len());
            log.losses.push(loss);
        }

        let model = GbdtModel {
            num_classes: nc,
            feature_dim: features.cols(),
            learning_rate: self.learning_rate as f32,
            max_depth: self.max_depth,
            class_weights: class_w.iter().map(|w| *w as f32).collect(),
            trees,
        };
        Ok((model, log))
    }

    fn round_rows(&self, t: usize, round: u64) -> Vec<u32> {
        let mut rows: Vec<u32> = (0..t as u32).collect();
        if self.subsample < 1.0 {
            let m = ((self.subsample * t as f64).round() as usize).clamp(1, t);
            let mut rng = seeded_rng(self.seed, round);
            rows.partial_shuffle(&mut rng, m);
            rows.truncate(m);
            rows.sort_unstable();
        }
        rows
    }
}

impl Trainer for GbdtConfig {
    type Model = GbdtModel;

    fn fit(&self, set: &TrainSet) -> Result<GbdtModel> {
        self.fit_with_log(set).map(|(m, _)| m)
    }
}

/// Softmax over the classes with positive weight; the rest get 0.
pub(crate) fn masked_softmax<W: Copy + Into<f64>>(scores: &mut [f64], class_w: &[W]) {
    let mx = scores
        .iter()
        .zip(class_w)
        .filter(|(_, w)| (**w).into() > 0.0)
        .map(|(s, _)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (s, w) in scores.iter_mut().zip(class_w) {
        *s = if (*w).into() > 0.0 { (*s - mx).exp() } else { 0.0 };
        total += *s;
    }
    for s in scores.iter_mut() {
        *s /= total;
    }
}

fn weighted_loss(margins: &[f64], labels: &[u8], w: &[f64], class_w: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((m, &y), &wi) in margins.chunks(class_w.len()).zip(labels).zip(w) {
        let live = || m.iter().zip(class_w).filter(|(_, cw)| **cw > 0.0).map(|(v, _)| *v);
        let mx = live().fold(f64::NEG_INFINITY, f64::max);
        let lse = mx + live().map(|v| (v - mx).exp()).sum::<f64>().ln();
        num += wi * (lse - m[y as usize]);
        den += wi;
    }
    num / den
}

type Histogram = Vec<Vec<[f64; 2]>>;

struct Split {
    feature: usize,
    bin: usize,
    gain: f64,
}

struct TreeBuilder<'a, B> {
    cfg: &'a GbdtConfig,
    binned: &'a BinnedMatrix<B>,
    g: &'a [f64],
    h: &'a [f64],
    nodes: Vec<Node>,
}

impl<'a, B: BinIndex> TreeBuilder<'a, B> {
    fn new(cfg: &'a GbdtConfig, binned: &'a BinnedMatrix<B>, g: &'a [f64], h: &'a [f64]) -> Self {
        Self {
            cfg,
            binned,
            g,
            h,
            nodes: Vec::new(),
        }
    }

    fn build(mut self, class: u32, rows: Vec<u32>) -> Result<Tree> {
        let hist = self.histogram(&rows);
        self.grow(rows, hist, 0);
        Tree::new(class, self.nodes)
    }

    fn histogram(&self, rows: &[u32]) -> Histogram {
        (0..self.binned.cols())
            .into_par_iter()
            .map(|f| {
                let col = self.binned.column(f);
                let mut hist = vec![[0.0; 2]; self.binned.cuts(f).num_bins()];
                for &i in rows {
                    let i = i as usize;
                    let b = &mut hist[col[i].into()];
                    b[0] += self.g[i];
                    b[1] += self.h[i];
                }
                hist
            })
            .collect()
    }

    fn best_split(&self, hist: &Histogram) -> Option<Split> {
        let lambda = self.cfg.lambda;
        let mcw = self.cfg.min_child_weight;
        let per_feature: Vec<Option<Split>> = hist
            .par_iter()
            .enumerate()
            .map(|(f, bins)| {
                let (gt, ht) = bins
                    .iter()
                    .fold((0.0, 0.0), |(g, h), b| (g + b[0], h + b[1]));
                let parent = gt * gt / (ht + lambda);
                let (mut gl, mut hl) = (0.0, 0.0);
                let mut best: Option<Split> = None;
                for (b, bin) in bins[..bins.len() - 1].iter().enumerate() {
                    gl += bin[0];
                    hl += bin[1];
                    let (gr, hr) = (gt - gl, ht - hl);
                    if hl < mcw || hr < mcw || hl <= 0.0 || hr <= 0.0 {
                        continue;
                    }
                    let gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent;
                    if best.as_ref().is_none_or(|s| gain > s.gain) {
                        best = Some(Split {
                            feature: f,
                            bin: b,
                            gain,
                        });
                    }
                }
                best
            })
            .collect();
        let mut best: Option<Split> = None;
        for s in per_feature.into_iter().flatten() {
            if best.as_ref().is_none_or(|b| s.gain > b.gain) {
                best = Some(s);
            }
        }
        best.filter(|s| s.gain > self.cfg.gamma + MIN_GAIN)
    }

    fn grow(&mut self, rows: Vec<u32>, hist: Histogram, depth: usize) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node::Leaf(0.0));
        let split = if depth < self.cfg.max_depth && rows.len() >= 2 {
            self.best_split(&hist)
        } else {
            None
        };
        let Some(split) = split else {
            let (g, h) = rows.iter().fold((0.0, 0.0), |(g, h), &i| {
                (g + self.g[i as usize], h + self.h[i as usize])
            });
            let w = -g / (h + self.cfg.lambda) * self.cfg.learning_rate;
            self.nodes[id as usize] = Node::Leaf(w as f32);
            return id;
        };
        let col = self.binned.column(split.feature);
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows
            .iter()
            .partition(|&&i| col[i as usize].into() <= split.bin);
        drop(rows);
        let (left_hist, right_hist) = if left_rows.len() <= right_rows.len() {
            let small = self.histogram(&left_rows);
            let big = subtract(hist, &small);
            (small, big)
        } else {
            let small = self.histogram(&right_rows);
            let big = subtract(hist, &small);
            (big, small)
        };
        let left = self.grow(left_rows, left_hist, depth + 1);
        let right = self.grow(right_rows, right_hist, depth + 1);
        self.nodes[id as usize] = Node::Split {
            feature: split.feature as u32,
            threshold: self.binned.cuts(split.feature).cuts[split.bin],
            left,
            right,
        };
        id
    }
}

fn subtract(mut parent: Histogram, child: &Histogram) -> Histogram {
    for (p, c) in parent.iter_mut().zip(child) {
        for (pb, cb) in p.iter_mut().zip(c) {
            pb[0] -= cb[0];
            pb[1] -= cb[1];
        }
    }
    parent
}

/// A fitted boosted-tree ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct GbdtModel {
    pub(crate) num_classes: usize,
    pub(crate) feature_dim: usize,
    pub(crate) learning_rate: f32,
    pub(crate) max_depth: usize,
    pub(crate) class_weights: Vec<f32>,
    pub(crate) trees: Vec<Tree>,
}

impl GbdtModel {
    /// Assembles a model from parts, checking that every tree fits it.
    pub fn new(
        num_classes: usize,
        feature_dim: usize,
        learning_rate: f32,
        max_depth: usize,
        class_weights: Vec<f32>,
        trees: Vec<Tree>,
    ) -> Result<Self> {
        let m = Self {
            num_classes,
            feature_dim,
            learning_rate,
            max_depth,
            class_weights,
            trees,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if self.num_classes == 0 {
            return Err(Error::format("model without classes"));
        }
        if self.class_weights.len() != self.num_classes {
            return Err(Error::format("class weight count differs from class count"));
        }
        if self.class_weights.iter().any(|w| !(*w >= 0.0 && w.is_finite()))
            || !self.class_weights.iter().any(|w| *w > 0.0)
        {
            return Err(Error::format("class weights must be finite, >= 0 and not all 0"));
        }
        for (k, t) in self.trees.iter().enumerate() {
            if t.class() as usize >= self.num_classes {
                return Err(Error::format(format!("tree {k} targets class {}", t.class())));
            }
            if t.max_feature().is_some_and(|f| f as usize >= self.feature_dim) {
                return Err(Error::format(format!("tree {k} splits on a missing feature")));
            }
            if t.depth() > self.max_depth {
                return Err(Error::format(format!("tree {k} deeper than {}", self.max_depth)));
            }
        }
        Ok(())
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn learning_rate(&self) -> f32 {
        self.learning_rate
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn class_weights(&self) -> &[f32] {
        &self.class_weights
    }

    /// Two per internal node (feature, threshold) plus one per leaf.
    pub fn count_parameters(&self) -> usize {
        self.trees
            .iter()
            .map(|t| 2 * t.num_internal() + t.num_leaves())
            .sum()
    }

    /// Classes seen in training; the others have weight 0 and are never
    /// predicted.
    pub fn trained_classes(&self) -> Vec<u8> {
        (0..self.num_classes)
            .filter(|&c| self.class_weights[c] > 0.0)
            .map(|c| c as u8)
            .collect()
    }

    /// Summed tree outputs per class for one row, in tree order.
    pub fn raw_scores(&self, row: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.num_classes];
        for t in &self.trees {
            s[t.class() as usize] += t.predict_row(row) as f64;
        }
        s
    }

    fn check_input(&self, features: &Matrix) -> Result<()> {
        if features.cols() != self.feature_dim {
            return Err(Error::argument(format!(
                "model expects {} features, got {}",
                self.feature_dim,
                features.cols()
            )));
        }
        if !features.is_finite() {
            return Err(Error::state("features contain non-finite values"));
        }
        Ok(())
    }
}

impl Classifier for GbdtModel {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    fn predict_proba(&self, features: &Matrix) -> Result<Matrix> {
        self.check_input(features)?;
        let nc = self.num_classes;
        let mut out = Matrix::zeros(features.rows(), nc);
        out.as_mut_slice()
            .par_chunks_mut(nc)
            .enumerate()
            .for_each(|(i, dst)| {
                dst.copy_from_slice(&self.raw_scores(features.row(i)));
                masked_softmax(dst, &self.class_weights);
            });
        Ok(out)
    }
}
