//! Label-free encoder-decoder feature extraction.
//!
//! Each encoder hop randomly subsamples the previous level, gathers the `k`
//! nearest previous-level points around every sampled center, appends a
//! 10-wide relative position code to each neighbor's features, max-pools
//! over the neighborhood and standardizes the result with a single scalar
//! mean and standard deviation. Widths therefore grow by 10 per hop
//! (21, 31, 41, 51, 61 with the default four hops).
//!
//! The decoder walks back up: features of a coarse level are interpolated
//! onto the next finer level from its 3 nearest coarse points with
//! inverse-distance weights and concatenated with that level's own
//! features. At full resolution the output has `61+51+41+31+21 = 205`
//! columns, ordered coarsest first.
//!
//! Nothing here takes labels.

mod decoder;
mod encoder;
mod params;
mod positional;
mod quantize;

pub use decoder::{decode, interpolate};
pub use encoder::{
    encode, encoder_hop, fit_params, max_pool_neighbors, EncodedHop, HopLevel, HopPyramid,
    StandardizeMode,
};
pub use params::{ExtractorParams, Standardization};
pub use positional::{positional_encode, POSITIONAL_DIM};
pub use quantize::quantize_features;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DEFAULT_SAMPLE_RATIOS: [f64; 4] = [0.25, 0.25, 0.5, 0.5];
pub const DEFAULT_K_NEIGHBORS: usize = 64;
pub const DEFAULT_INTERP_NEIGHBORS: usize = 3;
pub const STD_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct HopConfig {
    pub k_neighbors: usize,
    /// One subsampling ratio per hop; its length is the hop count.
    pub sample_ratios: Vec<f64>,
    pub interp_neighbors: usize,
    pub seed: u64,
}

impl Default for HopConfig {
    fn default() -> Self {
        Self {
            k_neighbors: DEFAULT_K_NEIGHBORS,
            sample_ratios: DEFAULT_SAMPLE_RATIOS.to_vec(),
            interp_neighbors: DEFAULT_INTERP_NEIGHBORS,
            seed: 0,
        }
    }
}

impl HopConfig {
    pub fn num_hops(&self) -> usize {
        self.sample_ratios.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_ratios.is_empty() {
            return Err(Error::argument("at least one hop is required"));
        }
        if let Some(r) = self
            .sample_ratios
            .iter()
            .find(|r| !(**r > 0.0 && **r <= 1.0))
        {
            return Err(Error::argument(format!("sample ratio {r} outside (0, 1]")));
        }
        if self.k_neighbors == 0 {
            return Err(Error::argument("k_neighbors must be at least 1"));
        }
        if self.interp_neighbors == 0 {
            return Err(Error::argument("interp_neighbors must be at least 1"));
        }
        Ok(())
    }

    /// Feature width after every level, input included.
    pub fn widths(&self, input_dim: usize) -> Vec<usize> {
        (0..=self.num_hops())
            .map(|h| input_dim + h * POSITIONAL_DIM)
            .collect()
    }

    /// Width of the decoded full-resolution features.
    pub fn output_dim(&self, input_dim: usize) -> usize {
        self.widths(input_dim).iter().sum()
    }
}

/// Seed of one unit, derived from the run seed and the unit id so that a
/// unit gets the same samples whether it is processed alone or in a batch.
pub fn unit_seed(seed: u64, unit_id: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in unit_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    seed ^ h
}

/// Encode with fixed parameters and decode back to full resolution.
pub fn extract(unit: &PointCloud, config: &HopConfig, params: &ExtractorParams) -> Result<Matrix> {
    let pyramid = encode(unit, config, StandardizeMode::Apply(params))?;
    decode(&pyramid, unit.positions(), config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_widths() {
        let c = HopConfig::default();
        assert_eq!(c.widths(21), vec![21, 31, 41, 51, 61]);
        assert_eq!(c.output_dim(21), 205);
    }

    #[test]
    fn validation() {
        let mut c = HopConfig::default();
        assert!(c.validate().is_ok());
        c.sample_ratios = vec![0.5, 0.0];
        assert!(c.validate().is_err());
        c.sample_ratios = vec![];
        assert!(c.validate().is_err());
        let c = HopConfig {
            k_neighbors: 0,
            ..HopConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn unit_seed_depends_on_id() {
        assert_eq!(unit_seed(1, "a"), unit_seed(1, "a"));
        assert_ne!(unit_seed(1, "a"), unit_seed(1, "b"));
        assert_ne!(unit_seed(1, "a"), unit_seed(2, "a"));
    }
}
