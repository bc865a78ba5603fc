//! Confusion matrices, IoU/accuracy metrics, fold aggregation and report
//! output.

mod export;
mod report;

pub use export::{colorize, export_colored_cloud};
pub use report::{format_table, report_json};

use serde::Serialize;

use crate::classes::NUM_CLASSES;
use crate::error::{Error, Result};

/// How a class that appears in neither truth nor prediction enters the
/// mean IoU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IouPolicy {
    /// Leave it out of the mean.
    #[default]
    SkipAbsent,
    /// Count it as IoU 0.
    CountAsZero,
}

impl std::str::FromStr for IouPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "skip" | "skip-absent" => Ok(Self::SkipAbsent),
            "zero" | "count-as-zero" => Ok(Self::CountAsZero),
            other => Err(Error::argument(format!("unknown IoU policy {other:?}"))),
        }
    }
}

/// Counts indexed by (truth, prediction).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n: usize,
    counts: Vec<u64>,
}

impl Default for ConfusionMatrix {
    fn default() -> Self {
        Self::new(NUM_CLASSES)
    }
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self {
            n: num_classes,
            counts: vec![0; num_classes * num_classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.n
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.n + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n).map(|c| self.get(c, c)).sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.counts[c * self.n..(c + 1) * self.n].iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        (0..self.n).map(|r| self.get(r, c)).sum()
    }

    pub fn accumulate(&mut self, truth: &[u8], pred: &[u8]) -> Result<()> {
        if truth.len() != pred.len() {
            return Err(Error::state(format!(
                "{} truth labels but {} predictions",
                truth.len(),
                pred.len()
            )));
        }
        if let Some(l) = truth.iter().chain(pred).find(|&&l| l as usize >= self.n) {
            return Err(Error::argument(format!("label {l} out of range")));
        }
        for (&t, &p) in truth.iter().zip(pred) {
            self.counts[t as usize * self.n + p as usize] += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.n != self.n {
            return Err(Error::state("confusion matrices differ in size"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

/// Per-class IoU (`None` where the union is empty), mean IoU and overall
/// accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub per_class_iou: Vec<Option<f64>>,
    pub miou: f64,
    pub oa: f64,
}

pub fn compute_iou(cm: &ConfusionMatrix, policy: IouPolicy) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::state("empty confusion matrix"));
    }
    let per_class_iou: Vec<Option<f64>> = (0..cm.n)
        .map(|c| {
            let tp = cm.get(c, c);
            let union = cm.row_sum(c) + cm.col_sum(c) - tp;
            (union > 0).then(|| tp as f64 / union as f64)
        })
        .collect();
    Ok(Metrics {
        miou: mean_iou(&per_class_iou, policy),
        oa: cm.trace() as f64 / total as f64,
        per_class_iou,
    })
}

fn mean_iou(per_class: &[Option<f64>], policy: IouPolicy) -> f64 {
    let vals: Vec<f64> = match policy {
        IouPolicy::SkipAbsent => per_class.iter().flatten().copied().collect(),
        IouPolicy::CountAsZero => per_class.iter().map(|v| v.unwrap_or(0.0)).collect(),
    };
    if vals.is_empty() {
        0.0
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

/// Metrics of one fold, or of several folds combined when `fold` is `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub fold: Option<u8>,
    pub per_class_iou: Vec<Option<f64>>,
    pub miou: f64,
    pub oa: f64,
    pub points: u64,
    pub policy: IouPolicy,
}

impl EvalReport {
    pub fn from_confusion(cm: &ConfusionMatrix, fold: Option<u8>, policy: IouPolicy) -> Result<Self> {
        let m = compute_iou(cm, policy)?;
        Ok(Self {
            fold,
            per_class_iou: m.per_class_iou,
            miou: m.miou,
            oa: m.oa,
            points: cm.total(),
            policy,
        })
    }
}

/// Mean of `vals` independent of their order; equal values come back
/// unchanged.
fn sorted_mean(mut vals: Vec<f64>) -> f64 {
    vals.sort_by(f64::total_cmp);
    let lo = vals[0];
    lo + vals.iter().map(|v| v - lo).sum::<f64>() / vals.len() as f64
}

/// Averages fold reports: each class IoU over the folds (subject to the
/// policy), mean IoU over those averages and OA over the folds.
pub fn aggregate_folds(reports: &[EvalReport]) -> Result<EvalReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::argument("no fold reports to aggregate"))?;
    let n = first.per_class_iou.len();
    let policy = first.policy;
    if reports
        .iter()
        .any(|r| r.per_class_iou.len() != n || r.policy != policy)
    {
        return Err(Error::state("fold reports disagree on classes or policy"));
    }
    let per_class_iou: Vec<Option<f64>> = (0..n)
        .map(|c| {
            let defined: Vec<f64> = reports.iter().filter_map(|r| r.per_class_iou[c]).collect();
            if defined.is_empty() {
                return None;
            }
            Some(match policy {
                IouPolicy::SkipAbsent => sorted_mean(defined),
                IouPolicy::CountAsZero => sorted_mean(
                    reports
                        .iter()
                        .map(|r| r.per_class_iou[c].unwrap_or(0.0))
                        .collect(),
                ),
            })
        })
        .collect();
    Ok(EvalReport {
        fold: None,
        miou: mean_iou(&per_class_iou, policy),
        oa: sorted_mean(reports.iter().map(|r| r.oa).collect()),
        points: reports.iter().map(|r| r.points).sum(),
        per_class_iou,
        policy,
    })
}
