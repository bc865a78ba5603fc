use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::classes::NUM_CLASSES;
use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Reads an ASCII room file with one `x y z r g b [label]` record per line.
///
/// Blank lines are skipped. Labels are kept only when every record carries
/// the seventh field; mixing 6- and 7-field records is a parse error.
pub fn read_room_file(path: &Path) -> Result<PointCloud> {
    let unit_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("unit")
        .to_string();
    let reader = BufReader::new(File::open(path)?);
    parse_room(reader, path, unit_id)
}

pub fn parse_room(reader: impl BufRead, path: &Path, unit_id: String) -> Result<PointCloud> {
    let mut positions = Vec::new();
    let mut colors = Vec::new();
    let mut labels = Vec::new();
    let mut field_count = None;

    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 6 && fields.len() != 7 {
            return Err(parse_err(
                line_no,
                format!("expected 6 or 7 fields, found {}", fields.len()),
            ));
        }
        match field_count {
            None => field_count = Some(fields.len()),
            Some(n) if n != fields.len() => {
                return Err(parse_err(
                    line_no,
                    format!("{} fields after earlier lines with {n}", fields.len()),
                ))
            }
            _ => {}
        }

        let mut p = [0.0; 3];
        for (a, f) in fields[..3].iter().enumerate() {
            p[a] = f
                .parse::<f64>()
                .map_err(|e| parse_err(line_no, format!("coordinate {f:?}: {e}")))?;
            if !p[a].is_finite() {
                return Err(parse_err(line_no, format!("non-finite coordinate {f:?}")));
            }
        }
        let mut c = [0u8; 3];
        for (a, f) in fields[3..6].iter().enumerate() {
            let v = f
                .parse::<i64>()
                .map_err(|e| parse_err(line_no, format!("color {f:?}: {e}")))?;
            c[a] = u8::try_from(v)
                .map_err(|_| parse_err(line_no, format!("color {v} outside 0-255")))?;
        }
        positions.push(p);
        colors.push(c);
        if let Some(f) = fields.get(6) {
            let l = f
                .parse::<i64>()
                .map_err(|e| parse_err(line_no, format!("label {f:?}: {e}")))?;
            if !(0..NUM_CLASSES as i64).contains(&l) {
                return Err(parse_err(line_no, format!("label {l} outside 0-12")));
            }
            labels.push(l as u8);
        }
    }

    if positions.is_empty() {
        return Err(Error::EmptyInput(format!("{} has no points", path.display())));
    }
    let labels = (field_count == Some(7)).then_some(labels);
    PointCloud::new(unit_id, positions, colors, labels)
}

/// Writes `cloud` in the room file format. Coordinates use the shortest
/// representation that parses back to the same `f64`.
pub fn write_room_file(cloud: &PointCloud, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let labels = cloud.labels();
    for (i, (p, c)) in cloud.positions().iter().zip(cloud.colors()).enumerate() {
        write!(w, "{} {} {} {} {} {}", p[0], p[1], p[2], c[0], c[1], c[2])?;
        if let Some(l) = labels {
            write!(w, " {}", l[i])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<PointCloud> {
        parse_room(text.as_bytes(), Path::new("mem.txt"), "mem".into())
    }

    #[test]
    fn single_labeled_line() {
        let c = parse("1.0 2.0 3.0 255 0 0 2\n").unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.positions()[0], [1.0, 2.0, 3.0]);
        assert_eq!(c.colors()[0], [255, 0, 0]);
        assert_eq!(c.labels(), Some(&[2u8][..]));
    }

    #[test]
    fn order_is_preserved() {
        let c = parse("0 0 0 1 2 3\n\n1 1 1 4 5 6\n2 2 2 7 8 9\n").unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.labels().is_none());
        assert_eq!(c.positions()[2], [2.0, 2.0, 2.0]);
        assert_eq!(c.colors()[1], [4, 5, 6]);
    }

    #[test]
    fn mixed_field_counts_fail_with_line_number() {
        match parse("0 0 0 1 2 3 1\n1 1 1 4 5 6\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_values_fail() {
        assert!(matches!(parse("0 0 0 256 0 0"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("0 0 0 -1 0 0"), Err(Error::Parse { .. })));
        assert!(matches!(parse("0 0 0 0 0 0 13"), Err(Error::Parse { .. })));
        assert!(matches!(parse("0 x 0 0 0 0"), Err(Error::Parse { .. })));
        assert!(matches!(parse("0 0 0 0 0"), Err(Error::Parse { .. })));
        assert!(matches!(parse("nan 0 0 0 0 0"), Err(Error::Parse { .. })));
    }

    #[test]
    fn empty_file_is_empty_input() {
        assert!(matches!(parse("\n  \n"), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("room.txt");
        let c = PointCloud::new(
            "room",
            vec![[0.1, -2.25, 1e-9], [3.0, 4.0, 5.0]],
            vec![[1, 2, 3], [250, 0, 9]],
            Some(vec![0, 12]),
        )
        .unwrap();
        write_room_file(&c, &path).unwrap();
        assert_eq!(read_room_file(&path).unwrap(), c);
    }
}
