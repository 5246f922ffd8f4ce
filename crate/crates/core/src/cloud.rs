//! Labelled point clouds: the unit of ingestion.
//!
//! A cloud carries per-point colour and optional semantic / instance /
//! temporal labels. Label presence is uniform across a loaded file: either
//! every point has a class or none does, mirroring how the annotation columns
//! appear in the source formats.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::scalar::Real;

/// The nine semantic classes of the annotation schema.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[repr(u8)]
pub enum SemanticClass {
    Leaf = 1,
    Stem = 2,
    Berry = 3,
    Flower = 4,
    Crown = 5,
    Background = 6,
    OtherPlantPart = 7,
    ScanningTable = 8,
    EmergentLeaf = 9,
}

impl SemanticClass {
    pub const ALL: [SemanticClass; 9] = [
        SemanticClass::Leaf,
        SemanticClass::Stem,
        SemanticClass::Berry,
        SemanticClass::Flower,
        SemanticClass::Crown,
        SemanticClass::Background,
        SemanticClass::ScanningTable,
        SemanticClass::OtherPlantPart,
        SemanticClass::EmergentLeaf,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    /// Codes outside 1-9 are rejected; callers map the failure to a parse
    /// error with file context.
    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            1 => Some(SemanticClass::Leaf),
            2 => Some(SemanticClass::Stem),
            3 => Some(SemanticClass::Berry),
            4 => Some(SemanticClass::Flower),
            5 => Some(SemanticClass::Crown),
            6 => Some(SemanticClass::Background),
            7 => Some(SemanticClass::OtherPlantPart),
            8 => Some(SemanticClass::ScanningTable),
            9 => Some(SemanticClass::EmergentLeaf),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SemanticClass::Leaf => "leaf",
            SemanticClass::Stem => "stem",
            SemanticClass::Berry => "berry",
            SemanticClass::Flower => "flower",
            SemanticClass::Crown => "crown",
            SemanticClass::Background => "background",
            SemanticClass::OtherPlantPart => "other plant part",
            SemanticClass::ScanningTable => "scanning table",
            SemanticClass::EmergentLeaf => "emergent leaf",
        }
    }

    /// Classes excluded from plant-level measurements by default.
    pub fn default_exclusions() -> [SemanticClass; 2] {
        [SemanticClass::Background, SemanticClass::ScanningTable]
    }
}

/// One scanned point with its annotations.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct LabeledPoint<T = f64> {
    pub position: Vec3<T>,
    /// RGB, 0-255 per channel; zero when the source had no colour columns.
    pub color: [u8; 3],
    pub class: Option<SemanticClass>,
    pub instance: Option<u32>,
    /// Nominal identity consistent across repeat scans; carries no ordering.
    pub temporal_id: Option<u32>,
}

impl<T: Real> LabeledPoint<T> {
    pub fn unlabeled(position: Vec3<T>) -> Self {
        Self { position, color: [0, 0, 0], class: None, instance: None, temporal_id: None }
    }

    /// Enforces the per-point invariants (finite position, instance implies
    /// class).
    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() {
            return Err(Error::InvalidParams("non-finite point position".into()));
        }
        if self.instance.is_some() && self.class.is_none() {
            return Err(Error::InvalidParams("instance label without class label".into()));
        }
        Ok(())
    }
}

/// A labelled point cloud for one scan of one plant.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct LabeledPointCloud<T = f64> {
    pub points: Vec<LabeledPoint<T>>,
    pub plant_id: Option<String>,
    pub scan_date: Option<NaiveDate>,
    /// True when the source file carried colour columns.
    pub has_color: bool,
}

impl<T: Real> LabeledPointCloud<T> {
    pub fn new(points: Vec<LabeledPoint<T>>) -> Self {
        let has_color = points.iter().any(|p| p.color != [0, 0, 0]);
        Self { points, plant_id: None, scan_date: None, has_color }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec3<T>> {
        self.points.iter().map(|p| p.position).collect()
    }

    pub fn has_classes(&self) -> bool {
        !self.points.is_empty() && self.points.iter().all(|p| p.class.is_some())
    }

    pub fn has_instances(&self) -> bool {
        !self.points.is_empty() && self.points.iter().all(|p| p.instance.is_some())
    }

    pub fn has_temporal_ids(&self) -> bool {
        !self.points.is_empty() && self.points.iter().all(|p| p.temporal_id.is_some())
    }

    fn subset(&self, keep: impl Fn(&LabeledPoint<T>) -> bool) -> Self {
        Self {
            points: self.points.iter().filter(|p| keep(p)).cloned().collect(),
            plant_id: self.plant_id.clone(),
            scan_date: self.scan_date,
            has_color: self.has_color,
        }
    }

    /// Histogram of class codes over labelled points.
    pub fn class_histogram(&self) -> BTreeMap<u8, usize> {
        let mut h = BTreeMap::new();
        for p in &self.points {
            if let Some(c) = p.class {
                *h.entry(c.code()).or_insert(0) += 1;
            }
        }
        h
    }
}

/// Keeps exactly the points whose class is in `keep`, preserving order.
///
/// An empty `keep` set yields an empty cloud; deciding whether that is an
/// error is left to the caller.
pub fn filter_classes<T: Real>(
    cloud: &LabeledPointCloud<T>,
    keep: &[SemanticClass],
) -> Result<LabeledPointCloud<T>> {
    if !cloud.has_classes() {
        return Err(Error::UnlabeledCloud("class"));
    }
    Ok(cloud.subset(|p| p.class.map(|c| keep.contains(&c)).unwrap_or(false)))
}

/// Partitions the points of one class by instance id.
///
/// The parts are disjoint and their union equals `filter_classes(cloud,
/// [class])`.
pub fn split_instances<T: Real>(
    cloud: &LabeledPointCloud<T>,
    class: SemanticClass,
) -> Result<BTreeMap<u32, LabeledPointCloud<T>>> {
    if !cloud.has_classes() {
        return Err(Error::UnlabeledCloud("class"));
    }
    let of_class: Vec<&LabeledPoint<T>> =
        cloud.points.iter().filter(|p| p.class == Some(class)).collect();
    if of_class.iter().any(|p| p.instance.is_none()) {
        return Err(Error::UnlabeledCloud("instance"));
    }
    let mut parts: BTreeMap<u32, LabeledPointCloud<T>> = BTreeMap::new();
    for p in of_class {
        let id = p.instance.expect("checked above");
        parts
            .entry(id)
            .or_insert_with(|| LabeledPointCloud {
                points: Vec::new(),
                plant_id: cloud.plant_id.clone(),
                scan_date: cloud.scan_date,
                has_color: cloud.has_color,
            })
            .points
            .push(*p);
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeled(x: f64, class: SemanticClass, instance: u32) -> LabeledPoint {
        LabeledPoint {
            position: Vec3::new(x, 0.0, 0.0),
            color: [0, 0, 0],
            class: Some(class),
            instance: Some(instance),
            temporal_id: None,
        }
    }

    fn synthetic() -> LabeledPointCloud {
        let mut points = Vec::new();
        for i in 0..10 {
            points.push(labeled(i as f64, SemanticClass::Background, 1));
        }
        for i in 0..5 {
            points.push(labeled(100.0 + i as f64, SemanticClass::Stem, if i < 3 { 1 } else { 2 }));
        }
        LabeledPointCloud::new(points)
    }

    #[test]
    fn filter_keeps_all_with_full_set() {
        let cloud = synthetic();
        let out = filter_classes(&cloud, &SemanticClass::ALL).unwrap();
        assert_eq!(out.points, cloud.points);
    }

    #[test]
    fn filter_with_empty_keep_returns_empty() {
        let cloud = synthetic();
        let out = filter_classes(&cloud, &[]).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn filter_drops_background_and_table() {
        let cloud = synthetic();
        let keep: Vec<SemanticClass> = SemanticClass::ALL
            .iter()
            .copied()
            .filter(|c| !SemanticClass::default_exclusions().contains(c))
            .collect();
        let out = filter_classes(&cloud, &keep).unwrap();
        assert_eq!(out.len(), 5);
    }

    #[test]
    fn filter_unlabeled_is_an_error() {
        let cloud = LabeledPointCloud::new(vec![LabeledPoint::unlabeled(Vec3::<f64>::zero())]);
        assert!(matches!(
            filter_classes(&cloud, &SemanticClass::ALL),
            Err(Error::UnlabeledCloud(_))
        ));
    }

    #[test]
    fn split_partitions_by_instance() {
        let mut points = Vec::new();
        for i in 0..100 {
            points.push(labeled(i as f64, SemanticClass::Stem, 1));
        }
        for i in 0..50 {
            points.push(labeled(1000.0 + i as f64, SemanticClass::Stem, 2));
        }
        let cloud = LabeledPointCloud::new(points);
        let parts = split_instances(&cloud, SemanticClass::Stem).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[&1].len(), 100);
        assert_eq!(parts[&2].len(), 50);

        let union: usize = parts.values().map(|c| c.len()).sum();
        let filtered = filter_classes(&cloud, &[SemanticClass::Stem]).unwrap();
        assert_eq!(union, filtered.len());
    }

    #[test]
    fn split_single_instance_equals_filter() {
        let cloud: LabeledPointCloud = LabeledPointCloud::new((0..7).map(|i| labeled(i as f64, SemanticClass::Leaf, 4)).collect());
        let parts = split_instances(&cloud, SemanticClass::Leaf).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[&4].points, filter_classes(&cloud, &[SemanticClass::Leaf]).unwrap().points);
    }

    #[test]
    fn class_codes_round_trip() {
        for c in SemanticClass::ALL {
            assert_eq!(SemanticClass::from_code(c.code() as i64), Some(c));
        }
        assert_eq!(SemanticClass::from_code(0), None);
        assert_eq!(SemanticClass::from_code(10), None);
    }
}
