//! Directory conventions shared by the stages.
//!
//! A stage directory either holds `train/` and `test/` subdirectories or is
//! flat. Files inside are keyed by unit id:
//!
//! ```text
//! <unit>.txt       x y z r g b [label]
//! <unit>.attr      local attributes (GSIPFEAT)
//! <unit>.gsipfeat  hop features (GSIPFEAT)
//! <unit>.labels    one class id per line
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use greenseg_core::io::{list_files, read_label_file, read_room_file, stem_of};

pub const ROOM_EXT: &str = ".txt";
pub const ATTR_EXT: &str = ".attr";
pub const FEAT_EXT: &str = ".gsipfeat";
pub const LABEL_EXT: &str = ".labels";
pub const SPLITS: [&str; 2] = ["train", "test"];

/// `(relative name, path)` of every split under `root`: `train` and `test`
/// when either exists, otherwise `root` itself under the name `""`.
pub fn splits(root: &Path) -> Vec<(&'static str, PathBuf)> {
    let found: Vec<_> = SPLITS
        .iter()
        .map(|s| (*s, root.join(s)))
        .filter(|(_, p)| p.is_dir())
        .collect();
    if found.is_empty() {
        vec![("", root.to_path_buf())]
    } else {
        found
    }
}

/// Unit ids of the files in `dir` ending in `ext`.
pub fn unit_files(dir: &Path, ext: &str) -> Result<Vec<(String, PathBuf)>> {
    let files = list_files(dir, ext).with_context(|| format!("listing {}", dir.display()))?;
    Ok(files.into_iter().map(|p| (stem_of(&p, ext), p)).collect())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Ground truth for `unit`: `<unit>.labels`, else the label column of
/// `<unit>.txt`, searched in `dir`, `dir/test` and `dir/train`.
pub fn find_truth(dir: &Path, unit: &str) -> Result<Vec<u8>> {
    for d in [dir.to_path_buf(), dir.join("test"), dir.join("train")] {
        let labels = d.join(format!("{unit}{LABEL_EXT}"));
        if labels.is_file() {
            return read_label_file(&labels).with_context(|| format!("reading {}", labels.display()));
        }
        let room = d.join(format!("{unit}{ROOM_EXT}"));
        if room.is_file() {
            let cloud = read_room_file(&room).with_context(|| format!("reading {}", room.display()))?;
            return match cloud.labels() {
                Some(l) => Ok(l.to_vec()),
                None => bail!("{} has no label column", room.display()),
            };
        }
    }
    bail!("no ground truth for unit {unit} under {}", dir.display())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_and_split_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let s = splits(dir.path());
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].0, "");
        std::fs::create_dir(dir.path().join("test")).unwrap();
        let s = splits(dir.path());
        assert_eq!(s, vec![("test", dir.path().join("test"))]);
    }

    #[test]
    fn truth_from_room_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("test")).unwrap();
        std::fs::write(dir.path().join("test/u.txt"), "0 0 0 1 2 3 4\n1 1 1 1 2 3 5\n").unwrap();
        assert_eq!(find_truth(dir.path(), "u").unwrap(), vec![4, 5]);
        assert!(find_truth(dir.path(), "missing").is_err());
    }
}
