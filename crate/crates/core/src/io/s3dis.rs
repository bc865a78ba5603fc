//! Conversion of the per-object `Area_N/<room>/Annotations/<class>_<k>.txt`
//! layout into one labeled room file per room.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use log::info;

use crate::classes::label_for_object;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};

use super::room::{parse_room, write_room_file};

pub const AREA_COUNT: u8 = 6;

/// Concatenates the annotation files of one room directory, labeling each
/// object's points by its file-name prefix. Files are visited in name order.
pub fn convert_room(room_dir: &Path) -> Result<PointCloud> {
    let annotations = room_dir.join("Annotations");
    let files = super::list_files(&annotations, ".txt")?;
    if files.is_empty() {
        return Err(Error::EmptyInput(format!(
            "{} has no annotation files",
            annotations.display()
        )));
    }
    let room_id = room_dir
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("room")
        .to_string();

    let mut positions = Vec::new();
    let mut colors = Vec::new();
    let mut labels = Vec::new();
    for file in &files {
        let object = super::stem_of(file, ".txt");
        let label = label_for_object(&object);
        let part = parse_room(BufReader::new(File::open(file)?), file, object)?;
        positions.extend_from_slice(part.positions());
        colors.extend_from_slice(part.colors());
        labels.extend(std::iter::repeat_n(label, part.len()));
    }
    PointCloud::new(room_id, positions, colors, Some(labels))
}

/// Converts every `Area_N/<room>` under `root` into `out/Area_N/<room>.txt`.
/// Returns the written paths.
pub fn convert_dataset(root: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for area in 1..=AREA_COUNT {
        let area_name = format!("Area_{area}");
        let area_dir = root.join(&area_name);
        if !area_dir.is_dir() {
            continue;
        }
        let out_dir = out.join(&area_name);
        std::fs::create_dir_all(&out_dir)?;
        let mut rooms: Vec<PathBuf> = std::fs::read_dir(&area_dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("Annotations").is_dir())
            .collect();
        rooms.sort();
        for room_dir in rooms {
            let cloud = convert_room(&room_dir)?;
            let path = out_dir.join(format!("{}.txt", cloud.unit_id()));
            write_room_file(&cloud, &path)?;
            info!("{area_name}/{}: {} points", cloud.unit_id(), cloud.len());
            written.push(path);
        }
    }
    if written.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no Area_N/<room>/Annotations directories under {}",
            root.display()
        )));
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn labels_follow_object_prefix() {
        let dir = tempfile::tempdir().unwrap();
        let ann = dir.path().join("Area_1/office_1/Annotations");
        fs::create_dir_all(&ann).unwrap();
        fs::write(ann.join("chair_1.txt"), "0 0 0 1 1 1\n0 0 1 1 1 1\n").unwrap();
        fs::write(ann.join("wall_2.txt"), "5 0 0 9 9 9\n").unwrap();
        fs::write(ann.join("stairs_1.txt"), "7 7 7 0 0 0\n").unwrap();

        let out = dir.path().join("out");
        let written = convert_dataset(dir.path(), &out).unwrap();
        assert_eq!(written, vec![out.join("Area_1/office_1.txt")]);

        let room = super::super::read_room_file(&written[0]).unwrap();
        // chair_1, stairs_1, wall_2 in name order
        assert_eq!(room.labels().unwrap(), &[8, 8, 12, 2]);
        assert_eq!(room.positions()[3], [5.0, 0.0, 0.0]);
    }

    #[test]
    fn empty_root_fails() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            convert_dataset(dir.path(), &dir.path().join("o")),
            Err(Error::EmptyInput(_))
        ));
    }
}
