//! `strawkit volume <scan>`

use std::path::PathBuf;

use serde::Serialize;
use strawkit::volumetrics::{plant_volume, voxelize};

use super::{load_scan, parse_classes};
use crate::output::{emit, to_json};

#[derive(Serialize)]
struct VolumeOutput {
    plant_id: Option<String>,
    scan_date: Option<chrono::NaiveDate>,
    resolution_mm: f64,
    excluded_classes: Vec<u8>,
    voxels: usize,
    volume_cm3: f64,
}

pub fn run(
    scan: &PathBuf,
    resolution: f64,
    exclude: &str,
    out: Option<&PathBuf>,
) -> anyhow::Result<u8> {
    let cloud = load_scan(scan)?;
    let exclude = parse_classes(exclude)?;
    let grid = voxelize(&cloud, resolution, &exclude)?;
    let output = VolumeOutput {
        plant_id: cloud.plant_id.clone(),
        scan_date: cloud.scan_date,
        resolution_mm: resolution,
        excluded_classes: exclude.iter().map(|c| c.code()).collect(),
        voxels: grid.occupied_count(),
        volume_cm3: plant_volume(&grid),
    };
    emit(out, &to_json(&output)?)?;
    Ok(0)
}
