//! File formats: ASCII room files, label files, the GSIPFEAT binary feature
//! format and conversion of per-object annotation dumps.

mod features;
mod labels;
mod room;
mod s3dis;

pub use features::{read_feature_file, read_features, write_feature_file, write_features, Precision};
pub use labels::{read_label_file, write_label_file};
pub use room::{parse_room, read_room_file, write_room_file};
pub use s3dis::{convert_dataset, convert_room, AREA_COUNT};

use std::path::{Path, PathBuf};

use crate::error::Result;

/// Sorted list of files in `dir` whose name ends with `suffix`.
pub fn list_files(dir: &Path, suffix: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file()
            && path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(suffix))
        {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// File name with `suffix` stripped, used as the unit id.
pub fn stem_of(path: &Path, suffix: &str) -> String {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    name.strip_suffix(suffix).unwrap_or(name).to_string()
}
