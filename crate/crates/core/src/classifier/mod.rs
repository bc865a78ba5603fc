//! Multiclass gradient-boosted trees with a softmax objective.
//!
//! Every boosting round fits one regression tree per class on the
//! second-order expansion of the weighted softmax log-loss. The tree
//! budget counts trees, not rounds, so the last round may cover only the
//! first few classes. Features are truncated to f32 before binning and
//! prediction compares in f32 as well, so a saved model reproduces the
//! training-time routing exactly.

mod binning;
mod gbdt;
mod model_io;
mod tree;

pub use binning::{BinIndex, BinnedMatrix, FeatureCuts};
pub use gbdt::{class_weights, GbdtConfig, GbdtModel, TrainingLog};
pub use model_io::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};
pub use tree::{Node, Tree};

use crate::classes::NUM_CLASSES;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DEFAULT_NUM_TREES: usize = 128;
pub const DEFAULT_MAX_DEPTH: usize = 6;
pub const DEFAULT_LEARNING_RATE: f64 = 0.3;
pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_HIST_BINS: usize = 256;

/// Labeled rows for training.
#[derive(Debug, Clone)]
pub struct TrainSet {
    features: Matrix,
    labels: Vec<u8>,
}

impl TrainSet {
    pub fn new(features: Matrix, labels: Vec<u8>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::state(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if !features.is_finite() {
            return Err(Error::state("training features contain non-finite values"));
        }
        if let Some(l) = labels.iter().find(|&&l| l as usize >= NUM_CLASSES) {
            return Err(Error::argument(format!("label {l} out of range")));
        }
        Ok(Self { features, labels })
    }

    /// Concatenates several sets with the same feature width.
    pub fn concat(parts: Vec<TrainSet>) -> Result<Self> {
        let mats: Vec<&Matrix> = parts.iter().map(|p| &p.features).collect();
        let features = Matrix::vstack(&mats)?;
        let labels = parts.iter().flat_map(|p| p.labels.iter().copied()).collect();
        Ok(Self { features, labels })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// A fitted point classifier.
pub trait Classifier: Send + Sync {
    fn num_classes(&self) -> usize;

    fn feature_dim(&self) -> usize;

    /// Softmax probabilities, one row per input row.
    fn predict_proba(&self, features: &Matrix) -> Result<Matrix>;

    /// Most probable class per row; ties go to the lower class id.
    fn predict(&self, features: &Matrix) -> Result<Vec<u8>> {
        let p = self.predict_proba(features)?;
        Ok(p.iter_rows().map(argmax).collect())
    }
}

/// Something that turns a [`TrainSet`] into a [`Classifier`].
pub trait Trainer {
    type Model: Classifier;

    fn fit(&self, set: &TrainSet) -> Result<Self::Model>;
}

pub(crate) fn argmax(row: &[f64]) -> u8 {
    let mut best = 0;
    for (c, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = c;
        }
    }
    best as u8
}

/// Numerically stable softmax in place.
pub fn softmax(scores: &mut [f64]) {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - m).exp();
        total += *s;
    }
    for s in scores.iter_mut() {
        *s /= total;
    }
}
