//! Deterministic synthetic scans with exact ground truth.
//!
//! Desk-scale stand-ins for real scans: stems are point-sampled cylinder
//! surfaces around known centerlines (straight, curved, and curved with an
//! occluded angular sector), leaves are sampled grids (flat or furled around
//! a cylinder, which preserves area), and the mini plant combines crown,
//! petioles, leaves, background and table across several scan dates with
//! temporally consistent leaf ids. Angular samples come from a golden-ratio
//! sequence so sector bookkeeping is sharp; the seeded generator only
//! jitters radii.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cloud::{LabeledPoint, LabeledPointCloud, SemanticClass};
use crate::error::Result;
use crate::geom::{Rigid, Vec3};
use crate::io::{write_cloud_ply, write_mesh_ply, write_skeleton_ply, write_xyz_table, PlyEncoding};
use crate::mesh::TriangleMesh;
use crate::skeleton::Skeleton;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SynthKind {
    StemStraight,
    StemCurved,
    StemOccluded,
    LeafFlat,
    LeafFurled,
    PlantMini,
}

impl SynthKind {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "stem-straight" => Some(Self::StemStraight),
            "stem-curved" => Some(Self::StemCurved),
            "stem-occluded" => Some(Self::StemOccluded),
            "leaf-flat" => Some(Self::LeafFlat),
            "leaf-furled" => Some(Self::LeafFurled),
            "plant-mini" => Some(Self::PlantMini),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::StemStraight => "stem-straight",
            Self::StemCurved => "stem-curved",
            Self::StemOccluded => "stem-occluded",
            Self::LeafFlat => "leaf-flat",
            Self::LeafFurled => "leaf-furled",
            Self::PlantMini => "plant-mini",
        }
    }
}

/// A generated stem: labelled cloud, exact centerline skeleton, and the
/// closed-form centerline length.
pub struct SynthStem {
    pub cloud: LabeledPointCloud,
    pub gt_skeleton: Skeleton,
    pub exact_length_mm: f64,
    /// Points removed by the occlusion sector (zero for full stems).
    pub removed_points: usize,
    /// Points in the region eligible for removal.
    pub occludable_points: usize,
}

/// A generated leaf: labelled cloud, ground-truth mesh, and the closed-form
/// surface area.
pub struct SynthLeaf {
    pub cloud: LabeledPointCloud,
    pub gt_mesh: TriangleMesh,
    pub exact_area_mm2: f64,
}

const STEM_COLOR: [u8; 3] = [110, 160, 90];
const LEAF_COLOR: [u8; 3] = [70, 170, 60];

fn golden_angle(i: usize) -> f64 {
    // frac(i * phi) * 2*pi, a low-discrepancy circle sequence.
    const PHI_FRAC: f64 = 0.618_033_988_749_894_9;
    (i as f64 * PHI_FRAC).fract() * TAU
}

fn stem_point(position: Vec3<f64>, instance: u32) -> LabeledPoint {
    LabeledPoint {
        position,
        color: STEM_COLOR,
        class: Some(SemanticClass::Stem),
        instance: Some(instance),
        temporal_id: None,
    }
}

/// Cylinder-surface samples around a straight vertical centerline.
pub fn straight_stem(n: usize, length_mm: f64, tube_radius: f64, seed: u64) -> SynthStem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let z = (i as f64 + 0.5) / n as f64 * length_mm;
        let phi = golden_angle(i);
        let r = tube_radius * (1.0 + rng.random_range(-0.05..0.05));
        points.push(stem_point(Vec3::new(r * phi.cos(), r * phi.sin(), z), 1));
    }
    let gt_vertices: Vec<Vec3<f64>> = (0..=60)
        .map(|k| Vec3::new(0.0, 0.0, k as f64 / 60.0 * length_mm))
        .collect();
    SynthStem {
        cloud: LabeledPointCloud::new(points),
        gt_skeleton: Skeleton::chain(gt_vertices).expect("chain"),
        exact_length_mm: length_mm,
        removed_points: 0,
        occludable_points: 0,
    }
}

fn arc_center(arc_radius: f64, t: f64) -> Vec3<f64> {
    Vec3::new(arc_radius * t.sin(), 0.0, arc_radius * (1.0 - t.cos()))
}

/// Cylinder-surface samples around a quarter-circle centerline of the
/// given radius; exact length is `radius * pi / 2`. When `occlude` is set,
/// points in a 90-degree angular sector are removed along the second half
/// of the arc.
pub fn curved_stem(n: usize, arc_radius: f64, tube_radius: f64, seed: u64, occlude: bool) -> SynthStem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut removed = 0usize;
    let mut occludable = 0usize;
    for i in 0..n {
        let t = (i as f64 + 0.5) / n as f64 * FRAC_PI_2;
        let center = arc_center(arc_radius, t);
        // Tube frame: tangent (cos t, 0, sin t); in-plane normal and the
        // arc plane's normal y span the cross-section.
        let n1 = Vec3::new(-t.sin(), 0.0, t.cos());
        let n2 = Vec3::new(0.0, 1.0, 0.0);
        let phi = golden_angle(i);
        let r = tube_radius * (1.0 + rng.random_range(-0.05..0.05));
        let p = center + (n1 * phi.cos() + n2 * phi.sin()) * r;

        let in_second_half = t >= FRAC_PI_2 / 2.0;
        if occlude && in_second_half {
            occludable += 1;
            if phi < FRAC_PI_2 {
                removed += 1;
                continue;
            }
        }
        points.push(stem_point(p, 1));
    }
    // ~2 mm ground-truth spacing: comparable to hand-placed skeleton
    // vertices, and coarse enough that max-edge densification yields the
    // same vertex density on both sides of a later comparison.
    let gt_segments = (arc_radius * FRAC_PI_2 / 2.0).ceil() as usize;
    let gt_vertices: Vec<Vec3<f64>> = (0..=gt_segments)
        .map(|k| arc_center(arc_radius, k as f64 / gt_segments as f64 * FRAC_PI_2))
        .collect();
    SynthStem {
        cloud: LabeledPointCloud::new(points),
        gt_skeleton: Skeleton::chain(gt_vertices).expect("chain"),
        exact_length_mm: arc_radius * FRAC_PI_2,
        removed_points: removed,
        occludable_points: occludable,
    }
}

fn grid_mesh(
    rows: usize,
    cols: usize,
    position: impl Fn(usize, usize) -> Vec3<f64>,
) -> (Vec<Vec3<f64>>, Vec<[u32; 3]>) {
    let mut vertices = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            vertices.push(position(i, j));
        }
    }
    let mut triangles = Vec::new();
    for i in 0..rows - 1 {
        for j in 0..cols - 1 {
            let a = (i * cols + j) as u32;
            let b = (i * cols + j + 1) as u32;
            let c = ((i + 1) * cols + j) as u32;
            let d = ((i + 1) * cols + j + 1) as u32;
            triangles.push([a, b, c]);
            triangles.push([b, d, c]);
        }
    }
    (vertices, triangles)
}

fn leaf_cloud_from(
    vertices: &[Vec3<f64>],
    instance: u32,
    temporal: u32,
    pose: &Rigid<f64>,
) -> LabeledPointCloud {
    let points = vertices
        .iter()
        .map(|&p| LabeledPoint {
            position: pose.apply(p),
            color: LEAF_COLOR,
            class: Some(SemanticClass::Leaf),
            instance: Some(instance),
            temporal_id: Some(temporal),
        })
        .collect();
    let mut cloud = LabeledPointCloud::new(points);
    cloud.has_color = true;
    cloud
}

fn seed_pose(seed: u64) -> Rigid<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eaf);
    let axis = Vec3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(0.2..1.0),
    );
    Rigid::from_axis_angle(
        axis,
        rng.random_range(0.0..PI),
        Vec3::new(
            rng.random_range(-20.0..20.0),
            rng.random_range(-20.0..20.0),
            rng.random_range(30.0..60.0),
        ),
    )
}

/// Flat square leaf grid (`side_mm` x `side_mm`), arbitrarily posed; exact
/// area is the side squared.
pub fn flat_leaf(side_mm: f64, spacing: f64, seed: u64) -> SynthLeaf {
    let cells = (side_mm / spacing).round() as usize;
    let step = side_mm / cells as f64;
    let (vertices, triangles) =
        grid_mesh(cells + 1, cells + 1, |i, j| Vec3::new(i as f64 * step, j as f64 * step, 0.0));
    let pose = seed_pose(seed);
    let cloud = leaf_cloud_from(&vertices, 1, 1, &pose);
    let gt_vertices: Vec<Vec3<f64>> = vertices.iter().map(|&p| pose.apply(p)).collect();
    SynthLeaf {
        cloud,
        gt_mesh: TriangleMesh::new(gt_vertices, triangles).expect("grid mesh"),
        exact_area_mm2: side_mm * side_mm,
    }
}

/// Square leaf grid bent isometrically around a cylinder (area is
/// preserved by the bend, so the exact area is still the side squared).
pub fn furled_leaf(side_mm: f64, spacing: f64, bend_radius: f64, seed: u64) -> SynthLeaf {
    let cells = (side_mm / spacing).round() as usize;
    let step = side_mm / cells as f64;
    let (vertices, triangles) = grid_mesh(cells + 1, cells + 1, |i, j| {
        let x = i as f64 * step;
        let y = j as f64 * step;
        Vec3::new(
            bend_radius * (x / bend_radius).sin(),
            y,
            bend_radius * (1.0 - (x / bend_radius).cos()),
        )
    });
    let pose = seed_pose(seed);
    let cloud = leaf_cloud_from(&vertices, 1, 1, &pose);
    let gt_vertices: Vec<Vec3<f64>> = vertices.iter().map(|&p| pose.apply(p)).collect();
    SynthLeaf {
        cloud,
        gt_mesh: TriangleMesh::new(gt_vertices, triangles).expect("grid mesh"),
        exact_area_mm2: side_mm * side_mm,
    }
}

/// One scan date of the mini plant.
pub struct MiniScan {
    pub date: NaiveDate,
    pub cloud: LabeledPointCloud,
    /// Ground-truth skeleton per stem instance.
    pub stem_skeletons: BTreeMap<u32, Skeleton>,
    /// Ground-truth mesh per leaf instance.
    pub leaf_meshes: BTreeMap<u32, TriangleMesh>,
    /// Exact petiole length per stem instance.
    pub stem_lengths: BTreeMap<u32, f64>,
    /// Exact leaf area per leaf instance (ids equal temporal ids).
    pub leaf_areas: BTreeMap<u32, f64>,
}

/// A small plant scanned on several dates: crown, three petioles with
/// attached leaves (temporally consistent ids), background and table.
pub fn mini_plant(seed: u64) -> Vec<MiniScan> {
    let dates = [
        NaiveDate::from_ymd_opt(2022, 5, 13).unwrap(),
        NaiveDate::from_ymd_opt(2022, 5, 20).unwrap(),
        NaiveDate::from_ymd_opt(2022, 5, 27).unwrap(),
    ];
    let growth = [0.6, 0.8, 1.0];

    let mut scans = Vec::new();
    for (di, (&date, &g)) in dates.iter().zip(&growth).enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(di as u64));
        let mut points: Vec<LabeledPoint> = Vec::new();
        let mut stem_skeletons = BTreeMap::new();
        let mut leaf_meshes = BTreeMap::new();
        let mut stem_lengths = BTreeMap::new();
        let mut leaf_areas = BTreeMap::new();

        // Crown: a small ball of points at the origin.
        for i in 0..300 {
            let phi = golden_angle(i);
            let cos_theta: f64 = rng.random_range(-1.0..1.0);
            let sin_theta = (1.0 - cos_theta * cos_theta).sqrt();
            let r = 3.0 * rng.random_range(0.4..1.0f64).cbrt();
            points.push(LabeledPoint {
                position: Vec3::new(
                    r * sin_theta * phi.cos(),
                    r * sin_theta * phi.sin(),
                    r * cos_theta * 0.6 + 2.0,
                ),
                color: [150, 120, 80],
                class: Some(SemanticClass::Crown),
                instance: Some(1),
                temporal_id: None,
            });
        }

        // Petioles: arcs rising from the crown, one per leaf.
        for k in 1..=3u32 {
            let psi = k as f64 / 3.0 * TAU;
            let arc_radius = (28.0 + 8.0 * k as f64) * g;
            let span = 1.1; // radians of arc
            let exact_len = arc_radius * span;
            let out = Vec3::new(psi.cos(), psi.sin(), 0.0);
            let up = Vec3::new(0.0, 0.0, 1.0);
            let base = Vec3::new(2.0 * psi.cos(), 2.0 * psi.sin(), 2.0);
            let center_at = |t: f64| base + out * (arc_radius * t.sin()) + up * (arc_radius * (1.0 - t.cos()));

            let n_pts = 1400;
            for i in 0..n_pts {
                let t = (i as f64 + 0.5) / n_pts as f64 * span;
                let tangent = out * t.cos() + up * t.sin();
                let n1 = out * (-t.sin()) + up * t.cos();
                let n2 = tangent.cross(n1).normalized().unwrap_or(Vec3::new(0.0, 1.0, 0.0));
                let phi = golden_angle(i);
                let r = 1.1 * (1.0 + rng.random_range(-0.05..0.05));
                let p = center_at(t) + (n1 * phi.cos() + n2 * phi.sin()) * r;
                points.push(stem_point(p, k));
            }
            let gt_segments = (exact_len / 2.0).ceil().max(4.0) as usize;
            let gt: Vec<Vec3<f64>> = (0..=gt_segments)
                .map(|i| center_at(i as f64 / gt_segments as f64 * span))
                .collect();
            stem_skeletons.insert(k, Skeleton::chain(gt).expect("chain"));
            stem_lengths.insert(k, exact_len);

            // Leaf grid at the petiole tip, tilted gently.
            let side = (11.0 + 2.0 * k as f64) * g;
            let spacing = 0.7;
            let cells = (side / spacing).round().max(4.0) as usize;
            let step = side / cells as f64;
            let tip = center_at(span);
            let leaf_x = out;
            let leaf_y = up.cross(out).normalized().unwrap();
            let leaf_z = leaf_x.cross(leaf_y);
            let (vertices, triangles) = grid_mesh(cells + 1, cells + 1, |i, j| {
                let u = (i as f64 - cells as f64 / 2.0) * step;
                let v = (j as f64 - cells as f64 / 2.0) * step;
                tip + leaf_x * u + leaf_y * v + leaf_z * (0.08 * u)
            });
            for p in &vertices {
                points.push(LabeledPoint {
                    position: *p,
                    color: LEAF_COLOR,
                    class: Some(SemanticClass::Leaf),
                    instance: Some(k),
                    temporal_id: Some(k),
                });
            }
            // The grid tilts by factor 0.08 along u, stretching that axis.
            let tilt = (1.0f64 + 0.08 * 0.08).sqrt();
            leaf_meshes.insert(k, TriangleMesh::new(vertices, triangles).expect("grid mesh"));
            leaf_areas.insert(k, side * side * tilt);
        }

        // Background plane and scanning table.
        for i in 0..400 {
            let phi = golden_angle(i);
            let r = 90.0 * rng.random_range(0.1..1.0f64).sqrt();
            points.push(LabeledPoint {
                position: Vec3::new(r * phi.cos(), r * phi.sin(), -6.0 + rng.random_range(-0.3..0.3)),
                color: [60, 50, 40],
                class: Some(SemanticClass::Background),
                instance: Some(1),
                temporal_id: None,
            });
        }
        for i in 0..600 {
            let phi = golden_angle(i + 7);
            let r = 55.0 * rng.random_range(0.0..1.0f64).sqrt();
            points.push(LabeledPoint {
                position: Vec3::new(r * phi.cos(), r * phi.sin(), -2.0),
                color: [200, 200, 200],
                class: Some(SemanticClass::ScanningTable),
                instance: Some(1),
                temporal_id: None,
            });
        }

        // Every point needs a temporal id for the column to be written;
        // only leaves carry meaningful ones, the rest get 0.
        for p in &mut points {
            if p.temporal_id.is_none() {
                p.temporal_id = Some(0);
            }
        }

        let mut cloud = LabeledPointCloud::new(points);
        cloud.has_color = true;
        cloud.scan_date = Some(date);
        cloud.plant_id = Some("MINI".to_string());
        scans.push(MiniScan { date, cloud, stem_skeletons, leaf_meshes, stem_lengths, leaf_areas });
    }
    scans
}

#[derive(Serialize)]
pub struct SynthMetadata {
    pub kind: String,
    pub seed: u64,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_length_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_area_mm2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub occluded_sector_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub removed_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub occludable_points: Option<usize>,
    pub points_written: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_date: Option<BTreeMap<String, MiniDateMetadata>>,
}

#[derive(Serialize)]
pub struct MiniDateMetadata {
    pub stem_lengths_mm: BTreeMap<u32, f64>,
    pub leaf_areas_mm2: BTreeMap<u32, f64>,
    pub organ_counts: BTreeMap<String, usize>,
    pub points: usize,
}

const SYNTH_DATE: &str = "20220513";

/// Generates one synthetic dataset into `out_dir` and returns its
/// metadata. Files are deterministic for a fixed kind and seed.
pub fn generate_synthetic(kind: SynthKind, seed: u64, out_dir: &Path) -> Result<SynthMetadata> {
    std::fs::create_dir_all(out_dir)?;
    let skel_dir = out_dir.join("gt_skeletons");
    let mesh_dir = out_dir.join("gt_meshes");

    let mut files: Vec<PathBuf> = Vec::new();
    let mut meta = SynthMetadata {
        kind: kind.name().to_string(),
        seed,
        files: Vec::new(),
        exact_length_mm: None,
        exact_area_mm2: None,
        occluded_sector_deg: None,
        removed_points: None,
        occludable_points: None,
        points_written: 0,
        per_date: None,
    };

    match kind {
        SynthKind::StemStraight | SynthKind::StemCurved | SynthKind::StemOccluded => {
            let stem = match kind {
                SynthKind::StemStraight => straight_stem(6000, 120.0, 1.5, seed),
                SynthKind::StemCurved => curved_stem(6000, 100.0, 1.5, seed, false),
                _ => curved_stem(6000, 100.0, 1.5, seed, true),
            };
            let mut cloud = stem.cloud;
            cloud.plant_id = Some("SYN1".into());
            cloud.scan_date = NaiveDate::from_ymd_opt(2022, 5, 13);
            let cloud_path = out_dir.join(format!("SYN1_{SYNTH_DATE}.xyz"));
            write_xyz_table(&cloud_path, &cloud)?;
            files.push(cloud_path);

            std::fs::create_dir_all(&skel_dir)?;
            let gt_path = skel_dir.join(format!("SYN1_{SYNTH_DATE}_stem_1.ply"));
            write_skeleton_ply(&gt_path, &stem.gt_skeleton, PlyEncoding::Ascii)?;
            files.push(gt_path);

            meta.exact_length_mm = Some(stem.exact_length_mm);
            meta.points_written = cloud.len();
            if kind == SynthKind::StemOccluded {
                meta.occluded_sector_deg = Some(90.0);
                meta.removed_points = Some(stem.removed_points);
                meta.occludable_points = Some(stem.occludable_points);
            }
        }
        SynthKind::LeafFlat | SynthKind::LeafFurled => {
            let leaf = match kind {
                SynthKind::LeafFlat => flat_leaf(30.0, 0.75, seed),
                _ => furled_leaf(30.0, 0.75, 15.0, seed),
            };
            let mut cloud = leaf.cloud;
            cloud.plant_id = Some("LEAF1".into());
            cloud.scan_date = NaiveDate::from_ymd_opt(2022, 5, 13);
            let cloud_path = out_dir.join(format!("LEAF1_{SYNTH_DATE}.xyz"));
            write_xyz_table(&cloud_path, &cloud)?;
            files.push(cloud_path);

            std::fs::create_dir_all(&mesh_dir)?;
            let gt_path = mesh_dir.join(format!("LEAF1_{SYNTH_DATE}_leaf_1.ply"));
            write_mesh_ply(&gt_path, &leaf.gt_mesh, PlyEncoding::Ascii)?;
            files.push(gt_path);

            meta.exact_area_mm2 = Some(leaf.exact_area_mm2);
            meta.points_written = cloud.len();
        }
        SynthKind::PlantMini => {
            std::fs::create_dir_all(&skel_dir)?;
            std::fs::create_dir_all(&mesh_dir)?;
            let mut per_date = BTreeMap::new();
            let mut total_points = 0usize;
            for scan in mini_plant(seed) {
                let date = scan.date.format("%Y%m%d").to_string();
                let cloud_path = out_dir.join(format!("MINI_{date}.ply"));
                write_cloud_ply(&cloud_path, &scan.cloud, PlyEncoding::BinaryLittleEndian)?;
                files.push(cloud_path);
                for (k, skel) in &scan.stem_skeletons {
                    let p = skel_dir.join(format!("MINI_{date}_stem_{k}.ply"));
                    write_skeleton_ply(&p, skel, PlyEncoding::Ascii)?;
                    files.push(p);
                }
                for (k, mesh) in &scan.leaf_meshes {
                    let p = mesh_dir.join(format!("MINI_{date}_leaf_{k}.ply"));
                    write_mesh_ply(&p, mesh, PlyEncoding::Ascii)?;
                    files.push(p);
                }
                total_points += scan.cloud.len();
                per_date.insert(
                    date,
                    MiniDateMetadata {
                        stem_lengths_mm: scan.stem_lengths,
                        leaf_areas_mm2: scan.leaf_areas,
                        organ_counts: BTreeMap::from([
                            ("leaf".to_string(), 3),
                            ("stem".to_string(), 3),
                            ("crown".to_string(), 1),
                        ]),
                        points: scan.cloud.len(),
                    },
                );
            }
            meta.per_date = Some(per_date);
            meta.points_written = total_points;
        }
    }

    meta.files = files
        .iter()
        .map(|p| {
            p.strip_prefix(out_dir).map(|q| q.display().to_string()).unwrap_or_else(|_| p.display().to_string())
        })
        .collect();
    let meta_path = out_dir.join("metadata.json");
    let json = serde_json::to_string_pretty(&meta).expect("metadata serialises");
    std::fs::write(meta_path, json)?;
    Ok(meta)
}
