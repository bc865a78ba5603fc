//! Semantic segmentation of indoor point clouds without backpropagation.
//!
//! Rooms are voxel-downsampled into one unit each, every point gets a
//! 21-column local attribute vector, a label-free hop encoder/decoder turns
//! those into 205 features per point and a boosted-tree ensemble labels the
//! points with one of 13 categories.
//!
//! ```no_run
//! use greenseg_core::pipeline::{run_split, PipelineConfig};
//! use greenseg_core::synthetic::{generate_rooms, SceneConfig};
//!
//! let rooms = generate_rooms(&SceneConfig::default(), 7, 20)?;
//! let cfg = PipelineConfig::default();
//! let out = run_split(&rooms[..15], &rooms[15..], &cfg, &cfg.gbdt, None)?;
//! println!("mIoU {:.3}", out.report.miou);
//! # Ok::<(), greenseg_core::error::Error>(())
//! ```

pub mod attributes;
pub mod classes;
pub mod classifier;
pub mod cloud;
pub mod error;
pub mod evaluation;
pub mod extractor;
pub mod io;
pub mod matrix;
pub mod pipeline;
pub mod preprocess;
pub mod spatial;
pub mod synthetic;

pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use matrix::Matrix;
