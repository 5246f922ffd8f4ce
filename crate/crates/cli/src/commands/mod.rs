//! Subcommand implementations.

pub mod eval;
pub mod leaf_area;
pub mod skeletonize;
pub mod synth;
pub mod track;
pub mod validate;
pub mod volume;

use std::path::Path;

use anyhow::Context;
use strawkit::cloud::SemanticClass;
use strawkit::io::load_point_cloud_auto;
use strawkit::Cloud;

/// Loads a scan file (PLY or xyz-table, inferred from the extension).
pub fn load_scan(path: &Path) -> anyhow::Result<Cloud> {
    load_point_cloud_auto(path).with_context(|| format!("loading scan {}", path.display()))
}

/// Parses a comma-separated list of class codes ("6,8").
pub fn parse_classes(spec: &str) -> anyhow::Result<Vec<SemanticClass>> {
    if spec.trim().is_empty() {
        return Ok(Vec::new());
    }
    spec.split(',')
        .map(|tok| {
            let code: i64 = tok
                .trim()
                .parse()
                .map_err(|_| anyhow::anyhow!("class code is not an integer: {tok:?}"))?;
            SemanticClass::from_code(code)
                .ok_or_else(|| anyhow::anyhow!("unknown class code {code} (valid: 1-9)"))
        })
        .collect()
}

/// Parses "x,y,z" into a point.
pub fn parse_point(spec: &str) -> anyhow::Result<strawkit::Point3> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 3 {
        anyhow::bail!("expected x,y,z but got {spec:?}");
    }
    let mut coords = [0.0f64; 3];
    for (c, p) in coords.iter_mut().zip(&parts) {
        *c = p.trim().parse().map_err(|_| anyhow::anyhow!("bad coordinate {p:?}"))?;
    }
    Ok(strawkit::Point3::new(coords[0], coords[1], coords[2]))
}
