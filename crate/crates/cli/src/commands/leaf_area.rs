//! `strawkit leaf-area <scan> --method {delaunay|bpa|zabawa}`

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use strawkit::cloud::{split_instances, SemanticClass};
use strawkit::io::read_mesh_ply;
use strawkit::leafmesh::{
    area_mape, ball_pivoting, delaunay_25d, zabawa_mesh, BallPivotParams, ZabawaParams,
};
use strawkit::{Cloud, LeafMesh};

use super::load_scan;
use crate::output::{emit, fmt_f64, to_json, Csv};

#[derive(Clone, Copy, PartialEq, Eq, Debug, clap::ValueEnum)]
pub enum MeshMethod {
    Delaunay,
    Bpa,
    Zabawa,
}

impl MeshMethod {
    pub fn name(self) -> &'static str {
        match self {
            MeshMethod::Delaunay => "delaunay",
            MeshMethod::Bpa => "bpa",
            MeshMethod::Zabawa => "zabawa",
        }
    }
}

impl std::fmt::Display for MeshMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MeshMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "delaunay" => Ok(Self::Delaunay),
            "bpa" => Ok(Self::Bpa),
            "zabawa" => Ok(Self::Zabawa),
            other => Err(format!("unknown method {other:?} (delaunay|bpa|zabawa)")),
        }
    }
}

pub fn mesh_leaf(leaf: &Cloud, method: MeshMethod, radius: Option<f64>) -> strawkit::Result<LeafMesh> {
    match method {
        MeshMethod::Delaunay => delaunay_25d(leaf),
        MeshMethod::Bpa => ball_pivoting(leaf, &BallPivotParams { radius, ..Default::default() }),
        MeshMethod::Zabawa => zabawa_mesh(leaf, &ZabawaParams::default()),
    }
}

#[derive(Serialize)]
struct MapeSummary {
    method: String,
    pairs: usize,
    mape: f64,
    per_leaf: Vec<MapePair>,
}

#[derive(Serialize)]
struct MapePair {
    leaf_instance: u32,
    estimated_mm2: f64,
    ground_truth_mm2: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    scan: &PathBuf,
    method: MeshMethod,
    radius: Option<f64>,
    gt_mesh_dir: Option<&PathBuf>,
    out: Option<&PathBuf>,
    mape_out: Option<&PathBuf>,
) -> anyhow::Result<u8> {
    let cloud = load_scan(scan)?;
    let leaves = split_instances(&cloud, SemanticClass::Leaf)?;
    let stem_name = scan
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| anyhow::anyhow!("scan path has no file name"))?
        .to_string();

    let mut jobs: Vec<(u32, Cloud)> = leaves.into_iter().collect();
    jobs.sort_by_key(|(id, _)| *id);
    let results: Vec<(u32, strawkit::Result<LeafMesh>)> = jobs
        .par_iter()
        .map(|(id, leaf)| (*id, mesh_leaf(leaf, method, radius)))
        .collect();

    let plant = cloud.plant_id.clone().unwrap_or_default();
    let date = cloud.scan_date.map(|d| d.to_string()).unwrap_or_default();
    let mut csv = Csv::new(&["plant", "date", "leaf_instance", "method", "area_mm2"]);
    let mut failures = Vec::new();
    let mut areas: BTreeMap<u32, f64> = BTreeMap::new();
    for (id, result) in &results {
        match result {
            Ok(mesh) => {
                let area = mesh.area();
                areas.insert(*id, area);
                csv.row(&[
                    plant.clone(),
                    date.clone(),
                    id.to_string(),
                    method.name().to_string(),
                    fmt_f64(area),
                ]);
            }
            Err(e) => failures.push(format!("leaf {id}: {e}")),
        }
    }
    emit(out, &csv.into_string())?;

    if let Some(gt_dir) = gt_mesh_dir {
        let summary = mape_against_gt(&stem_name, &areas, gt_dir, method, &mut failures)?;
        emit(mape_out, &to_json(&summary)?)?;
    }

    if failures.is_empty() {
        Ok(0)
    } else {
        for f in &failures {
            eprintln!("leaf-area: {f}");
        }
        eprintln!("leaf-area: {} failure(s)", failures.len());
        Ok(1)
    }
}

fn mape_against_gt(
    stem_name: &str,
    areas: &BTreeMap<u32, f64>,
    gt_dir: &Path,
    method: MeshMethod,
    failures: &mut Vec<String>,
) -> anyhow::Result<MapeSummary> {
    let mut per_leaf = Vec::new();
    let mut est = Vec::new();
    let mut gt = Vec::new();
    for (&id, &area) in areas {
        let gt_path = gt_dir.join(format!("{stem_name}_leaf_{id}.ply"));
        if !gt_path.exists() {
            failures.push(format!("leaf {id}: no ground-truth mesh at {}", gt_path.display()));
            continue;
        }
        let gt_area = read_mesh_ply(&gt_path)?.area();
        per_leaf.push(MapePair { leaf_instance: id, estimated_mm2: area, ground_truth_mm2: gt_area });
        est.push(area);
        gt.push(gt_area);
    }
    let mape = if est.is_empty() { 0.0 } else { area_mape(&est, &gt)? };
    Ok(MapeSummary { method: method.name().to_string(), pairs: per_leaf.len(), mape, per_leaf })
}
