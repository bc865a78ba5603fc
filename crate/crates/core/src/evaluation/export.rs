use std::path::Path;

use crate::classes::PALETTE;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::io::write_room_file;

/// Recolors `cloud` by `labels` with the class palette, leaving out points
/// labeled `drop`.
pub fn colorize(cloud: &PointCloud, labels: &[u8], drop: Option<u8>) -> Result<PointCloud> {
    if labels.len() != cloud.len() {
        return Err(Error::state(format!(
            "{} labels for {} points",
            labels.len(),
            cloud.len()
        )));
    }
    let mut positions = Vec::with_capacity(cloud.len());
    let mut colors = Vec::with_capacity(cloud.len());
    let mut kept = Vec::with_capacity(cloud.len());
    for (p, &l) in cloud.positions().iter().zip(labels) {
        let color = PALETTE
            .get(l as usize)
            .ok_or_else(|| Error::argument(format!("label {l} out of range")))?;
        if Some(l) == drop {
            continue;
        }
        positions.push(*p);
        colors.push(*color);
        kept.push(l);
    }
    if positions.is_empty() {
        return Err(Error::EmptyInput("every point was dropped".into()));
    }
    PointCloud::new(cloud.unit_id(), positions, colors, Some(kept))
}

/// Writes the recolored cloud as `x y z r g b label` lines.
pub fn export_colored_cloud(
    cloud: &PointCloud,
    labels: &[u8],
    path: &Path,
    drop: Option<u8>,
) -> Result<usize> {
    let colored = colorize(cloud, labels, drop)?;
    write_room_file(&colored, path)?;
    Ok(colored.len())
}
