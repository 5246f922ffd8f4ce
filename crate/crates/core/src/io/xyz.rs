//! Whitespace-separated table format for labelled point clouds.
//!
//! One record per line: `x y z [r g b [class [instance [temporal_id]]]]`,
//! so 3, 6, 7, 8 or 9 numeric columns. Lines starting with `#` are comments.
//! Every record in a file must use the same column count.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::cloud::{LabeledPoint, LabeledPointCloud, SemanticClass};
use crate::error::{Error, Result};
use crate::geom::Vec3;

fn malformed(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::MalformedRecord { path: path.to_path_buf(), line, message: message.into() }
}

fn parse_channel(path: &Path, line: usize, token: &str, what: &str) -> Result<u8> {
    let v: i64 = token
        .parse()
        .map_err(|_| malformed(path, line, format!("{what} is not an integer: {token:?}")))?;
    if !(0..=255).contains(&v) {
        return Err(malformed(path, line, format!("{what} out of range 0-255: {v}")));
    }
    Ok(v as u8)
}

fn parse_id(path: &Path, line: usize, token: &str, what: &str) -> Result<u32> {
    let v: i64 = token
        .parse()
        .map_err(|_| malformed(path, line, format!("{what} is not an integer: {token:?}")))?;
    u32::try_from(v).map_err(|_| malformed(path, line, format!("{what} must be non-negative: {v}")))
}

pub fn read_xyz_table(path: &Path) -> Result<LabeledPointCloud> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);

    let mut points = Vec::new();
    let mut expected_cols: Option<usize> = None;
    let mut has_color = false;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        let cols = tokens.len();
        if !matches!(cols, 3 | 6 | 7 | 8 | 9) {
            return Err(malformed(path, line_no, format!("expected 3, 6, 7, 8 or 9 columns, found {cols}")));
        }
        match expected_cols {
            None => expected_cols = Some(cols),
            Some(c) if c != cols => {
                return Err(malformed(path, line_no, format!("inconsistent column count: {cols} after {c}")));
            }
            _ => {}
        }

        let mut coords = [0.0f64; 3];
        for (i, c) in coords.iter_mut().enumerate() {
            *c = tokens[i]
                .parse()
                .map_err(|_| malformed(path, line_no, format!("coordinate is not a number: {:?}", tokens[i])))?;
            if !c.is_finite() {
                return Err(malformed(path, line_no, "non-finite coordinate"));
            }
        }

        let color = if cols >= 6 {
            has_color = true;
            [
                parse_channel(path, line_no, tokens[3], "red")?,
                parse_channel(path, line_no, tokens[4], "green")?,
                parse_channel(path, line_no, tokens[5], "blue")?,
            ]
        } else {
            [0, 0, 0]
        };

        let class = if cols >= 7 {
            let code: i64 = tokens[6]
                .parse()
                .map_err(|_| malformed(path, line_no, format!("class is not an integer: {:?}", tokens[6])))?;
            Some(SemanticClass::from_code(code).ok_or(Error::UnknownClassCode {
                path: path.to_path_buf(),
                line: line_no,
                code,
            })?)
        } else {
            None
        };

        let instance = if cols >= 8 { Some(parse_id(path, line_no, tokens[7], "instance")?) } else { None };
        let temporal_id = if cols >= 9 { Some(parse_id(path, line_no, tokens[8], "temporal_id")?) } else { None };

        points.push(LabeledPoint {
            position: Vec3::new(coords[0], coords[1], coords[2]),
            color,
            class,
            instance,
            temporal_id,
        });
    }

    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut cloud = LabeledPointCloud::new(points);
    cloud.has_color = has_color;
    Ok(cloud)
}

/// Writes the cloud with as many columns as its labels support. Floats use
/// the shortest representation that round-trips, so load(write(c)) is
/// value-exact.
pub fn write_xyz_table(path: &Path, cloud: &LabeledPointCloud) -> Result<()> {
    let with_class = cloud.has_classes();
    let with_instance = with_class && cloud.has_instances();
    let with_temporal = with_instance && cloud.has_temporal_ids();
    let with_color = cloud.has_color || with_class;

    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for p in &cloud.points {
        write!(out, "{} {} {}", p.position.x, p.position.y, p.position.z)?;
        if with_color {
            write!(out, " {} {} {}", p.color[0], p.color[1], p.color[2])?;
        }
        if with_class {
            write!(out, " {}", p.class.map(|c| c.code()).unwrap_or(0))?;
        }
        if with_instance {
            write!(out, " {}", p.instance.unwrap_or(0))?;
        }
        if with_temporal {
            write!(out, " {}", p.temporal_id.unwrap_or(0))?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write as _;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn three_column_file_yields_unlabeled_points() {
        let f = write_temp("# comment\n0 0 0\n1.5 2 3\n-1 -2 -3\n");
        let cloud = read_xyz_table(f.path()).unwrap();
        assert_eq!(cloud.len(), 3);
        assert!(cloud.points.iter().all(|p| p.class.is_none()));
        assert_eq!(cloud.points[1].position, Vec3::new(1.5, 2.0, 3.0));
    }

    #[test]
    fn unknown_class_code_is_rejected() {
        let f = write_temp("0 0 0 10 20 30 10\n");
        let err = read_xyz_table(f.path()).unwrap_err();
        assert!(matches!(err, Error::UnknownClassCode { code: 10, line: 1, .. }));
    }

    #[test]
    fn malformed_line_reports_position() {
        let f = write_temp("0 0 0\n1 2\n");
        let err = read_xyz_table(f.path()).unwrap_err();
        assert!(matches!(err, Error::MalformedRecord { line: 2, .. }));
    }

    #[test]
    fn empty_file_is_an_empty_cloud_error() {
        let f = write_temp("# nothing here\n");
        assert!(matches!(read_xyz_table(f.path()).unwrap_err(), Error::EmptyCloud));
    }

    #[test]
    fn full_record_round_trips() {
        let f = write_temp("1.25 -3.5 0.125 200 100 50 2 7 3\n");
        let cloud = read_xyz_table(f.path()).unwrap();
        let p = cloud.points[0];
        assert_eq!(p.color, [200, 100, 50]);
        assert_eq!(p.class, Some(SemanticClass::Stem));
        assert_eq!(p.instance, Some(7));
        assert_eq!(p.temporal_id, Some(3));

        let out = tempfile::NamedTempFile::new().unwrap();
        write_xyz_table(out.path(), &cloud).unwrap();
        let again = read_xyz_table(out.path()).unwrap();
        assert_eq!(again.points, cloud.points);
    }
}
