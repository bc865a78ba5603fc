use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classes::NUM_CLASSES;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Columnar point store for one unit (typically one room).
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    unit_id: String,
    positions: Vec<[f64; 3]>,
    colors: Vec<[u8; 3]>,
    labels: Option<Vec<u8>>,
    attributes: Option<Matrix>,
}

impl PointCloud {
    pub fn new(
        unit_id: impl Into<String>,
        positions: Vec<[f64; 3]>,
        colors: Vec<[u8; 3]>,
        labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        let unit_id = unit_id.into();
        if positions.is_empty() {
            return Err(Error::EmptyInput(format!("unit {unit_id} has no points")));
        }
        if colors.len() != positions.len() {
            return Err(Error::state(format!(
                "unit {unit_id}: {} colors for {} positions",
                colors.len(),
                positions.len()
            )));
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::state(format!("unit {unit_id}: non-finite position")));
        }
        if let Some(labels) = &labels {
            if labels.len() != positions.len() {
                return Err(Error::state(format!(
                    "unit {unit_id}: {} labels for {} positions",
                    labels.len(),
                    positions.len()
                )));
            }
            if let Some(bad) = labels.iter().find(|&&l| l as usize >= NUM_CLASSES) {
                return Err(Error::state(format!("unit {unit_id}: label {bad} out of range")));
            }
        }
        Ok(Self {
            unit_id,
            positions,
            colors,
            labels,
            attributes: None,
        })
    }

    pub fn with_attributes(mut self, attributes: Matrix) -> Result<Self> {
        self.set_attributes(attributes)?;
        Ok(self)
    }

    pub fn set_attributes(&mut self, attributes: Matrix) -> Result<()> {
        if attributes.rows() != self.len() {
            return Err(Error::state(format!(
                "unit {}: attribute matrix has {} rows for {} points",
                self.unit_id,
                attributes.rows(),
                self.len()
            )));
        }
        if !attributes.is_finite() {
            return Err(Error::state(format!(
                "unit {}: attribute matrix contains non-finite values",
                self.unit_id
            )));
        }
        self.attributes = Some(attributes);
        Ok(())
    }

    pub fn unit_id(&self) -> &str {
        &self.unit_id
    }

    pub fn set_unit_id(&mut self, id: impl Into<String>) {
        self.unit_id = id.into();
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn colors(&self) -> &[[u8; 3]] {
        &self.colors
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn attributes(&self) -> Option<&Matrix> {
        self.attributes.as_ref()
    }

    pub fn take_attributes(&mut self) -> Option<Matrix> {
        self.attributes.take()
    }

    /// New cloud made of the given rows (repeats allowed), carrying every
    /// per-point column along.
    pub fn select(&self, indices: &[usize], unit_id: impl Into<String>) -> Result<Self> {
        let positions = indices.iter().map(|&i| self.positions[i]).collect();
        let colors = indices.iter().map(|&i| self.colors[i]).collect();
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        let mut out = Self::new(unit_id, positions, colors, labels)?;
        if let Some(attr) = &self.attributes {
            out.attributes = Some(attr.select_rows(indices));
        }
        Ok(out)
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        bounds(&self.positions)
    }
}

pub(crate) fn bounds(points: &[[f64; 3]]) -> ([f64; 3], [f64; 3]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    Block,
    View,
    Room,
}

impl Style {
    /// Fixed unit size required by the style, if any.
    pub fn fixed_unit_size(self) -> Option<usize> {
        match self {
            Style::Block => Some(crate::preprocess::BLOCK_UNIT_POINTS),
            Style::View => Some(crate::preprocess::VIEW_UNIT_POINTS),
            Style::Room => None,
        }
    }
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Style::Block => "block",
            Style::View => "view",
            Style::Room => "room",
        })
    }
}

impl FromStr for Style {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "block" => Ok(Style::Block),
            "view" => Ok(Style::View),
            "room" => Ok(Style::Room),
            other => Err(Error::argument(format!("unknown style {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// Ordered collection of units produced by one pre-processing style.
#[derive(Debug, Clone)]
pub struct UnitSet {
    pub units: Vec<PointCloud>,
    pub style: Style,
    pub split: Split,
    /// Held-out area of the fold this set belongs to (1..=6).
    pub fold: u8,
}

impl UnitSet {
    pub fn new(units: Vec<PointCloud>, style: Style, split: Split, fold: u8) -> Result<Self> {
        if let Some(size) = style.fixed_unit_size() {
            if let Some(u) = units.iter().find(|u| u.len() != size) {
                return Err(Error::state(format!(
                    "{style} unit {} has {} points, expected {size}",
                    u.unit_id(),
                    u.len()
                )));
            }
        }
        Ok(Self {
            units,
            style,
            split,
            fold,
        })
    }

    pub fn total_points(&self) -> usize {
        self.units.iter().map(PointCloud::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(n: usize) -> PointCloud {
        PointCloud::new(
            "u",
            (0..n).map(|i| [i as f64, 0.0, 0.0]).collect(),
            vec![[0, 0, 0]; n],
            Some(vec![1; n]),
        )
        .unwrap()
    }

    #[test]
    fn rejects_mismatched_columns() {
        let err = PointCloud::new("u", vec![[0.0; 3]; 2], vec![[0; 3]; 1], None);
        assert!(matches!(err, Err(Error::State(_))));
    }

    #[test]
    fn rejects_out_of_range_label() {
        let err = PointCloud::new("u", vec![[0.0; 3]], vec![[0; 3]], Some(vec![13]));
        assert!(matches!(err, Err(Error::State(_))));
    }

    #[test]
    fn rejects_empty() {
        assert!(matches!(
            PointCloud::new("u", vec![], vec![], None),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn rejects_nan_attributes() {
        let mut m = Matrix::zeros(2, 1);
        m.as_mut_slice()[1] = f64::NAN;
        assert!(cloud(2).with_attributes(m).is_err());
    }

    #[test]
    fn select_repeats_rows() {
        let c = cloud(3).select(&[2, 2, 0], "s").unwrap();
        assert_eq!(c.positions(), &[[2.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        assert_eq!(c.labels().unwrap().len(), 3);
    }

    #[test]
    fn block_unitset_requires_4096() {
        assert!(UnitSet::new(vec![cloud(10)], Style::Block, Split::Train, 6).is_err());
        assert!(UnitSet::new(vec![cloud(10)], Style::Room, Split::Train, 6).is_ok());
    }
}
