use std::fmt::Write;

use serde_json::{json, Map, Value};

use crate::classes::CLASS_NAMES;

use super::EvalReport;

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{:.1}", 100.0 * x))
}

fn row_label(r: &EvalReport) -> String {
    r.fold.map_or_else(|| "mean".to_string(), |f| format!("Area {f}"))
}

/// Fixed-width table in percent, one row per report: OA, mIoU, then every
/// class.
pub fn format_table(reports: &[EvalReport]) -> String {
    let n = reports.first().map_or(CLASS_NAMES.len(), |r| r.per_class_iou.len());
    let mut out = String::new();
    let _ = write!(out, "{:<8} {:>6} {:>6}", "", "OA", "mIoU");
    for c in 0..n {
        let name = CLASS_NAMES.get(c).copied().unwrap_or("?");
        let _ = write!(out, " {name:>8}");
    }
    out.push('\n');
    for r in reports {
        let _ = write!(
            out,
            "{:<8} {:>6} {:>6}",
            row_label(r),
            pct(Some(r.oa)),
            pct(Some(r.miou))
        );
        for v in &r.per_class_iou {
            let _ = write!(out, " {:>8}", pct(*v));
        }
        out.push('\n');
    }
    out
}

fn one(r: &EvalReport) -> Value {
    let mut classes = Map::new();
    for (c, v) in r.per_class_iou.iter().enumerate() {
        let name = CLASS_NAMES.get(c).map_or_else(|| c.to_string(), |s| s.to_string());
        classes.insert(name, json!(v));
    }
    json!({
        "fold": r.fold,
        "miou": r.miou,
        "oa": r.oa,
        "points": r.points,
        "policy": r.policy,
        "per_class_iou": classes,
    })
}

/// Full-precision JSON: `{"folds": [...], "mean": {...}}`.
pub fn report_json(folds: &[EvalReport], mean: Option<&EvalReport>) -> Value {
    json!({
        "folds": folds.iter().map(one).collect::<Vec<_>>(),
        "mean": mean.map(one),
    })
}
