//! `strawkit track <plant-dir>`: per-plant trait time series.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use strawkit::cloud::{split_instances, SemanticClass};
use strawkit::io::{classify_ply, detect_format, CloudFormat, PlyKind};
use strawkit::skeletor::SkeletonParams;
use strawkit::tracking::{
    assign_petioles, build_time_series, crown_anchor, leaf_junction_points, organ_counts,
    ScanTraits, Subject, TraitKind, TraitTimeSeries,
};
use strawkit::volumetrics::{plant_volume, voxelize};
use strawkit::{Cloud, Point3};

use super::leaf_area::{mesh_leaf, MeshMethod};
use super::skeletonize::{estimate, SkeletonMethod};
use super::load_scan;
use crate::output::{emit, fmt_f64, to_json, Csv};

pub struct TrackOptions {
    pub mesh_method: MeshMethod,
    pub skeleton_method: SkeletonMethod,
    pub skeleton_params: SkeletonParams<f64>,
    pub resolution: f64,
    pub exclude: Vec<SemanticClass>,
}

/// Measures every trait a single scan supports; missing labels simply
/// produce fewer traits.
fn scan_traits(cloud: &Cloud, opts: &TrackOptions, warnings: &mut Vec<String>) -> ScanTraits {
    let mut values: Vec<(TraitKind, Subject, f64)> = Vec::new();
    if !cloud.has_classes() {
        return ScanTraits { values };
    }

    match voxelize(cloud, opts.resolution, &opts.exclude) {
        Ok(grid) => {
            values.push((TraitKind::VolumeCm3, Subject::WholePlant, plant_volume(&grid)));
        }
        Err(e) => warnings.push(format!("volume: {e}")),
    }

    if cloud.has_instances() {
        match organ_counts(cloud) {
            Ok(counts) => {
                for (class, count) in counts {
                    values.push((TraitKind::OrganCount, Subject::Class(class), count as f64));
                }
            }
            Err(e) => warnings.push(format!("organ counts: {e}")),
        }
    }

    // Leaf areas, keyed by temporal identity when the scan carries one.
    let mut leaf_centroids: BTreeMap<u32, Point3> = BTreeMap::new();
    if let Ok(leaves) = split_instances(cloud, SemanticClass::Leaf) {
        for (instance, leaf) in &leaves {
            let temporal = leaf.points.first().and_then(|p| p.temporal_id).filter(|&t| t > 0);
            let subject = match temporal {
                Some(t) => Subject::Organ { class: SemanticClass::Leaf, id: t, temporal: true },
                None => Subject::Organ { class: SemanticClass::Leaf, id: *instance, temporal: false },
            };
            if let Some(t) = temporal {
                leaf_centroids.insert(t, strawkit::geom::centroid(&leaf.positions()));
            }
            match mesh_leaf(leaf, opts.mesh_method, None) {
                Ok(mesh) => values.push((TraitKind::LeafAreaMm2, subject, mesh.area())),
                Err(e) => warnings.push(format!("leaf {instance}: {e}")),
            }
        }
    }

    // Petiole lengths; identities follow the assigned leaf when a crown
    // anchor and temporal leaf ids exist.
    if let Ok(stems) = split_instances(cloud, SemanticClass::Stem) {
        let mut skeletons = BTreeMap::new();
        let mut lengths: BTreeMap<u32, f64> = BTreeMap::new();
        for (instance, stem) in &stems {
            match estimate(stem, opts.skeleton_method, &opts.skeleton_params) {
                Ok(skeleton) => {
                    let length = skeleton.longest_path().map(|(l, _)| l).unwrap_or(0.0);
                    lengths.insert(*instance, length);
                    skeletons.insert(*instance, skeleton);
                }
                Err(e) => warnings.push(format!("stem {instance}: {e}")),
            }
        }

        let mut stem_to_leaf: BTreeMap<u32, u32> = BTreeMap::new();
        if !leaf_centroids.is_empty() && !skeletons.is_empty() {
            match crown_anchor(cloud) {
                Ok(crown) => {
                    let junction = leaf_junction_points(&skeletons, crown);
                    for skipped in &junction.skipped {
                        warnings.push(format!("stem {skipped}: single endpoint, not assigned"));
                    }
                    if !junction.junctions.is_empty() {
                        match assign_petioles(&junction.junctions, &leaf_centroids) {
                            Ok(assignment) => {
                                for (stem, leaf, _) in assignment.pairs {
                                    stem_to_leaf.insert(stem, leaf);
                                }
                            }
                            Err(e) => warnings.push(format!("petiole assignment: {e}")),
                        }
                    }
                }
                Err(e) => warnings.push(format!("crown anchor: {e}")),
            }
        }

        for (instance, length) in lengths {
            let subject = match stem_to_leaf.get(&instance) {
                Some(leaf) => Subject::Organ { class: SemanticClass::Stem, id: *leaf, temporal: true },
                None => Subject::Organ { class: SemanticClass::Stem, id: instance, temporal: false },
            };
            values.push((TraitKind::PetioleLengthMm, subject, length));
        }
    }

    ScanTraits { values }
}

#[derive(Serialize)]
struct SubjectSeries {
    dates: Vec<chrono::NaiveDate>,
    values: Vec<f64>,
    flags: Vec<bool>,
}

#[derive(Serialize)]
struct PlotData {
    plant_id: String,
    scan_dates: Vec<chrono::NaiveDate>,
    traits: BTreeMap<String, BTreeMap<String, SubjectSeries>>,
}

fn plot_data(series: &TraitTimeSeries) -> PlotData {
    let mut traits: BTreeMap<String, BTreeMap<String, SubjectSeries>> = BTreeMap::new();
    for entry in &series.entries {
        let by_subject = traits.entry(entry.kind.name().to_string()).or_default();
        let s = by_subject.entry(entry.subject.to_string()).or_insert_with(|| SubjectSeries {
            dates: Vec::new(),
            values: Vec::new(),
            flags: Vec::new(),
        });
        s.dates.push(entry.date);
        s.values.push(entry.value);
        s.flags.push(entry.drop_flag);
    }
    PlotData {
        plant_id: series.plant_id.clone(),
        scan_dates: series.scan_dates.clone(),
        traits,
    }
}

pub fn run(
    plant_dir: &PathBuf,
    opts: &TrackOptions,
    out_csv: Option<&PathBuf>,
    out_json: Option<&PathBuf>,
) -> anyhow::Result<u8> {
    // Scan files only: skeleton and mesh PLYs live in subdirectories or are
    // recognised by their header.
    let mut scan_paths = Vec::new();
    for path in crate::output::files_with_ext(plant_dir, &["ply", "xyz", "txt"])? {
        let is_cloud = match detect_format(&path) {
            Some(CloudFormat::Ply) => matches!(classify_ply(&path), Ok(PlyKind::PointCloud)),
            Some(CloudFormat::XyzTable) => true,
            None => false,
        };
        if is_cloud {
            scan_paths.push(path);
        }
    }
    if scan_paths.is_empty() {
        anyhow::bail!("no scans found in {}", plant_dir.display());
    }

    let loaded: Vec<anyhow::Result<(Cloud, ScanTraits, Vec<String>)>> = scan_paths
        .par_iter()
        .map(|path| {
            let cloud = load_scan(path)?;
            let mut warnings = Vec::new();
            let traits = scan_traits(&cloud, opts, &mut warnings);
            Ok((cloud, traits, warnings))
        })
        .collect();

    let mut scans = Vec::new();
    let mut warnings = Vec::new();
    let mut failures = Vec::new();
    for (path, result) in scan_paths.iter().zip(loaded) {
        match result {
            Ok((cloud, traits, mut warn)) => {
                warnings.append(&mut warn);
                scans.push((cloud, traits));
            }
            Err(e) => failures.push(format!("{}: {e}", path.display())),
        }
    }
    if scans.is_empty() {
        anyhow::bail!("all scans failed: {}", failures.join("; "));
    }

    let series = build_time_series(&scans)?;

    let mut csv = Csv::new(&["plant", "date", "trait", "class", "id", "value", "unit", "flag"]);
    for entry in &series.entries {
        csv.row(&[
            series.plant_id.clone(),
            entry.date.to_string(),
            entry.kind.name().to_string(),
            entry.subject.class().map(|c| c.code().to_string()).unwrap_or_default(),
            entry.subject.organ_id().map(|i| i.to_string()).unwrap_or_default(),
            fmt_f64(entry.value),
            entry.kind.unit().to_string(),
            if entry.drop_flag { "drop".to_string() } else { String::new() },
        ]);
    }
    emit(out_csv, &csv.into_string())?;
    emit(out_json, &to_json(&plot_data(&series))?)?;

    for w in &warnings {
        eprintln!("track: warning: {w}");
    }
    if failures.is_empty() {
        Ok(0)
    } else {
        for f in &failures {
            eprintln!("track: {f}");
        }
        Ok(1)
    }
}
