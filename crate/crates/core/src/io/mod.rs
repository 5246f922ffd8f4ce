//! File ingestion: labelled clouds, skeleton graphs, ground-truth meshes,
//! and whole-directory validation.

pub mod ply;
pub mod xyz;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;

use crate::cloud::LabeledPointCloud;
use crate::error::{Error, Result};

pub use ply::{
    classify_ply, read_cloud_ply, read_mesh_ply, read_skeleton_ply, write_cloud_ply,
    write_mesh_ply, write_skeleton_ply, PlyEncoding, PlyKind,
};
pub use xyz::{read_xyz_table, write_xyz_table};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CloudFormat {
    Ply,
    XyzTable,
}

/// Guesses the format from the file extension (`ply` vs `xyz`/`txt`).
pub fn detect_format(path: &Path) -> Option<CloudFormat> {
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
        Some(ext) if ext == "ply" => Some(CloudFormat::Ply),
        Some(ext) if ext == "xyz" || ext == "txt" => Some(CloudFormat::XyzTable),
        _ => None,
    }
}

/// Parses the `<plantID>_<YYYYMMDD>` filename convention, best effort.
pub fn parse_scan_filename(path: &Path) -> (Option<String>, Option<NaiveDate>) {
    let stem = match path.file_stem().and_then(|s| s.to_str()) {
        Some(s) => s,
        None => return (None, None),
    };
    if let Some((plant, date)) = stem.rsplit_once('_') {
        if date.len() == 8 && date.bytes().all(|b| b.is_ascii_digit()) {
            let year: i32 = date[0..4].parse().unwrap_or(0);
            let month: u32 = date[4..6].parse().unwrap_or(0);
            let day: u32 = date[6..8].parse().unwrap_or(0);
            if let Some(d) = NaiveDate::from_ymd_opt(year, month, day) {
                return (Some(plant.to_string()), Some(d));
            }
        }
    }
    (None, None)
}

/// Loads a labelled point cloud, stamping plant id and scan date from the
/// filename when it follows the naming convention.
pub fn load_point_cloud(path: &Path, format: CloudFormat) -> Result<LabeledPointCloud> {
    let mut cloud = match format {
        CloudFormat::Ply => read_cloud_ply(path)?,
        CloudFormat::XyzTable => read_xyz_table(path)?,
    };
    let (plant_id, scan_date) = parse_scan_filename(path);
    cloud.plant_id = plant_id;
    cloud.scan_date = scan_date;
    Ok(cloud)
}

/// Loads a cloud with the format inferred from the extension.
pub fn load_point_cloud_auto(path: &Path) -> Result<LabeledPointCloud> {
    let format = detect_format(path).ok_or_else(|| {
        Error::InvalidParams(format!("cannot infer cloud format of {}", path.display()))
    })?;
    load_point_cloud(path, format)
}

/// Loads a skeleton graph from PLY, returning the duplicate-edge count
/// alongside.
pub fn load_skeleton(path: &Path) -> Result<(crate::skeleton::Skeleton, usize)> {
    read_skeleton_ply(path)
}

/// Annotation richness of a scan, mirroring the dataset's coverage legend.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationLevel {
    PointsOnly,
    Instances,
    TemporalInstances,
}

#[derive(Clone, Debug, Serialize)]
pub struct FileIssue {
    pub path: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanSummary {
    pub path: String,
    pub plant_id: Option<String>,
    pub scan_date: Option<NaiveDate>,
    pub points: usize,
    pub annotation: AnnotationLevel,
    /// Points per class code.
    pub class_histogram: BTreeMap<u8, usize>,
    /// Distinct instance ids per class code.
    pub instances_per_class: BTreeMap<u8, usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverageCell {
    pub scan_date: NaiveDate,
    pub annotation: AnnotationLevel,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverageRow {
    pub plant_id: String,
    pub scans: Vec<CoverageCell>,
}

/// Validation report over a dataset directory. All per-file failures land
/// in `errors`; validation itself never fails.
#[derive(Clone, Debug, Serialize, Default)]
pub struct DatasetReport {
    pub files_scanned: usize,
    pub cloud_count: usize,
    pub annotated_count: usize,
    pub temporal_count: usize,
    pub skeleton_count: usize,
    pub mesh_count: usize,
    pub total_stem_instances: usize,
    pub errors: Vec<FileIssue>,
    pub scans: Vec<ScanSummary>,
    pub coverage: Vec<CoverageRow>,
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let mut entries: Vec<PathBuf> =
        std::fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    for entry in entries {
        if entry.is_dir() {
            collect_files(&entry, out)?;
        } else if matches!(
            entry.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
            Some("ply") | Some("xyz") | Some("txt")
        ) {
            out.push(entry);
        }
    }
    Ok(())
}

fn summarize_cloud(path: &Path, cloud: &LabeledPointCloud) -> ScanSummary {
    let annotation = if cloud.has_temporal_ids() {
        AnnotationLevel::TemporalInstances
    } else if cloud.has_classes() && cloud.has_instances() {
        AnnotationLevel::Instances
    } else {
        AnnotationLevel::PointsOnly
    };
    let mut instances: BTreeMap<u8, std::collections::BTreeSet<u32>> = BTreeMap::new();
    for p in &cloud.points {
        if let (Some(class), Some(instance)) = (p.class, p.instance) {
            instances.entry(class.code()).or_default().insert(instance);
        }
    }
    ScanSummary {
        path: path.display().to_string(),
        plant_id: cloud.plant_id.clone(),
        scan_date: cloud.scan_date,
        points: cloud.len(),
        annotation,
        class_histogram: cloud.class_histogram(),
        instances_per_class: instances.into_iter().map(|(k, v)| (k, v.len())).collect(),
    }
}

/// Validates every recognised file under `dir` (recursively) and assembles
/// per-scan histograms plus a plant-by-date coverage table.
pub fn validate_dataset(dir: &Path) -> DatasetReport {
    let mut report = DatasetReport::default();
    let mut files = Vec::new();
    if let Err(e) = collect_files(dir, &mut files) {
        report.errors.push(FileIssue { path: dir.display().to_string(), message: e.to_string() });
        return report;
    }
    report.files_scanned = files.len();

    for path in &files {
        let kind = match detect_format(path) {
            Some(CloudFormat::XyzTable) => Ok(PlyKind::PointCloud),
            Some(CloudFormat::Ply) => classify_ply(path),
            None => continue,
        };
        match kind {
            Err(e) => {
                report.errors.push(FileIssue { path: path.display().to_string(), message: e.to_string() });
            }
            Ok(PlyKind::Skeleton) => match load_skeleton(path) {
                Ok(_) => report.skeleton_count += 1,
                Err(e) => report
                    .errors
                    .push(FileIssue { path: path.display().to_string(), message: e.to_string() }),
            },
            Ok(PlyKind::Mesh) => match read_mesh_ply(path) {
                Ok(_) => report.mesh_count += 1,
                Err(e) => report
                    .errors
                    .push(FileIssue { path: path.display().to_string(), message: e.to_string() }),
            },
            Ok(PlyKind::PointCloud) => match load_point_cloud_auto(path) {
                Ok(cloud) => {
                    let summary = summarize_cloud(path, &cloud);
                    report.cloud_count += 1;
                    if summary.annotation != AnnotationLevel::PointsOnly {
                        report.annotated_count += 1;
                        report.total_stem_instances += summary
                            .instances_per_class
                            .get(&crate::cloud::SemanticClass::Stem.code())
                            .copied()
                            .unwrap_or(0);
                    }
                    if summary.annotation == AnnotationLevel::TemporalInstances {
                        report.temporal_count += 1;
                    }
                    report.scans.push(summary);
                }
                Err(e) => report
                    .errors
                    .push(FileIssue { path: path.display().to_string(), message: e.to_string() }),
            },
        }
    }

    // Coverage table keyed by plant then date, for scans that follow the
    // naming convention.
    let mut by_plant: BTreeMap<String, BTreeMap<NaiveDate, AnnotationLevel>> = BTreeMap::new();
    for scan in &report.scans {
        if let (Some(plant), Some(date)) = (&scan.plant_id, scan.scan_date) {
            by_plant.entry(plant.clone()).or_default().insert(date, scan.annotation);
        }
    }
    report.coverage = by_plant
        .into_iter()
        .map(|(plant_id, dates)| CoverageRow {
            plant_id,
            scans: dates
                .into_iter()
                .map(|(scan_date, annotation)| CoverageCell { scan_date, annotation })
                .collect(),
        })
        .collect();
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filename_convention_best_effort() {
        let (plant, date) = parse_scan_filename(Path::new("/data/A2_20220513.ply"));
        assert_eq!(plant.as_deref(), Some("A2"));
        assert_eq!(date, NaiveDate::from_ymd_opt(2022, 5, 13));

        let (plant, date) = parse_scan_filename(Path::new("notes.ply"));
        assert!(plant.is_none() && date.is_none());

        // Underscores inside the plant id are fine; the date is the last
        // component.
        let (plant, _) = parse_scan_filename(Path::new("variety_b_3_20220729.xyz"));
        assert_eq!(plant.as_deref(), Some("variety_b_3"));
    }

    #[test]
    fn empty_directory_gives_empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let report = validate_dataset(dir.path());
        assert_eq!(report.files_scanned, 0);
        assert!(report.errors.is_empty());
        assert!(report.scans.is_empty());
    }

    #[test]
    fn malformed_file_lands_in_errors() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("bad_20220101.xyz"), "1 2\n").unwrap();
        let report = validate_dataset(dir.path());
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.cloud_count, 0);
    }

    #[test]
    fn validates_mixed_directory() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("P1_20220513.xyz"),
            "0 0 0 1 2 3 2 1\n1 0 0 1 2 3 2 1\n2 0 0 1 2 3 1 4\n",
        )
        .unwrap();
        std::fs::write(dir.path().join("P1_20220520.xyz"), "0 0 0\n1 1 1\n").unwrap();
        let report = validate_dataset(dir.path());
        assert_eq!(report.cloud_count, 2);
        assert_eq!(report.annotated_count, 1);
        assert_eq!(report.coverage.len(), 1);
        assert_eq!(report.coverage[0].scans.len(), 2);
        assert_eq!(report.total_stem_instances, 1);
    }
}
