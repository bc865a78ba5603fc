use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cloud::UnitSet;
use crate::error::{Error, Result};

/// Unit-size summary of a unit set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub units: usize,
    pub min_unit: usize,
    pub max_unit: usize,
    pub mean_unit: f64,
    pub total_points: usize,
}

pub fn dataset_stats(set: &UnitSet) -> Result<DatasetStats> {
    stats_from_sizes(set.units.iter().map(|u| u.len()))
}

pub fn stats_from_sizes(sizes: impl IntoIterator<Item = usize>) -> Result<DatasetStats> {
    let sizes: Vec<usize> = sizes.into_iter().collect();
    if sizes.is_empty() {
        return Err(Error::EmptyInput("unit set has no units".into()));
    }
    let total: usize = sizes.iter().sum();
    Ok(DatasetStats {
        units: sizes.len(),
        min_unit: *sizes.iter().min().unwrap(),
        max_unit: *sizes.iter().max().unwrap(),
        mean_unit: total as f64 / sizes.len() as f64,
        total_points: total,
    })
}

impl DatasetStats {
    /// `key=value` lines prefixed with `prefix`.
    pub fn key_values(&self, prefix: &str) -> String {
        format!(
            "{prefix}.units={}\n{prefix}.min_unit={}\n{prefix}.max_unit={}\n{prefix}.mean_unit={}\n{prefix}.total_points={}\n",
            self.units, self.min_unit, self.max_unit, self.mean_unit, self.total_points
        )
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:>8} units  {:>9} min  {:>9} max  {:>11.1} mean  {:>12} points ({:.2} M)",
            self.units,
            self.min_unit,
            self.max_unit,
            self.mean_unit,
            self.total_points,
            self.total_points as f64 / 1e6
        )
    }
}
