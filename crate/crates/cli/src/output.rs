//! Deterministic output helpers: CSV with `.` decimals and shortest
//! round-trip floats, JSON at full double precision, and a stdout-or-file
//! sink.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;

/// Formats a float with the shortest representation that round-trips,
/// which is what `Display` for `f64` produces.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// A CSV table under construction (UTF-8, header row, no quoting — none of
/// the emitted fields contain separators).
pub struct Csv {
    buffer: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut buffer = header.join(",");
        buffer.push('\n');
        Self { buffer, columns: header.len() }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "csv row width mismatch");
        self.buffer.push_str(&fields.join(","));
        self.buffer.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buffer
    }
}

/// Writes `content` to the path, or to stdout when no path was given.
pub fn emit(path: Option<&PathBuf>, content: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(p, content).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Mean and (population) standard deviation of a column.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Files with one of the given extensions directly inside `dir`, sorted by
/// file name for reproducible batch order.
pub fn files_with_ext(dir: &Path, exts: &[&str]) -> anyhow::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .map(|e| exts.contains(&e.to_ascii_lowercase().as_str()))
                    .unwrap_or(false)
        })
        .collect();
    out.sort();
    Ok(out)
}
