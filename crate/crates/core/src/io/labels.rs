use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::classes::NUM_CLASSES;
use crate::error::{Error, Result};

/// Label files hold one class id per line.
pub fn write_label_file(labels: &[u8], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for l in labels {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_label_file(path: &Path) -> Result<Vec<u8>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: u8 = t.parse().ok().filter(|&v| (v as usize) < NUM_CLASSES).ok_or_else(|| {
            Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("bad label {t:?}"),
            }
        })?;
        out.push(v);
    }
    Ok(out)
}
