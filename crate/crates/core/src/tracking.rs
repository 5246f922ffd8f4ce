//! Per-plant trait time series and petiole-to-leaf identity assignment.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::Serialize;

use crate::cloud::{LabeledPointCloud, SemanticClass};
use crate::error::{Error, Result};
use crate::geom::{centroid, Vec3};
use crate::scalar::{real, Real};
use crate::skeleton::Skeleton;
use crate::skelmatch::{hungarian, CostMatrix};

/// Distinct instance count per semantic class, excluding background and
/// scanning table.
pub fn organ_counts<T: Real>(cloud: &LabeledPointCloud<T>) -> Result<BTreeMap<SemanticClass, usize>> {
    if !cloud.has_classes() {
        return Err(Error::UnlabeledCloud("class"));
    }
    let excluded = SemanticClass::default_exclusions();
    let mut ids: BTreeMap<SemanticClass, BTreeSet<u32>> = BTreeMap::new();
    for p in &cloud.points {
        if let (Some(class), Some(instance)) = (p.class, p.instance) {
            if !excluded.contains(&class) {
                ids.entry(class).or_default().insert(instance);
            }
        }
    }
    Ok(ids.into_iter().map(|(c, s)| (c, s.len())).collect())
}

/// Centroid of the crown-class points: the anchor used to tell the plant
/// end of a petiole from the leaf end.
pub fn crown_anchor<T: Real>(cloud: &LabeledPointCloud<T>) -> Result<Vec3<T>> {
    let crown: Vec<Vec3<T>> = cloud
        .points
        .iter()
        .filter(|p| p.class == Some(SemanticClass::Crown))
        .map(|p| p.position)
        .collect();
    if crown.is_empty() {
        return Err(Error::NoCrownPoints);
    }
    Ok(centroid(&crown))
}

/// Junction points (the leaf end) of stem skeletons plus the stems skipped
/// for lacking two endpoints.
#[derive(Clone, Debug)]
pub struct JunctionPoints<T = f64> {
    pub junctions: BTreeMap<u32, Vec3<T>>,
    /// Stems whose skeleton had fewer than two endpoints (cycles or single
    /// points), skipped with a warning.
    pub skipped: Vec<u32>,
}

/// For each stem skeleton, drops the endpoint nearest the crown and keeps
/// the farthest of the remainder as the leaf junction point.
pub fn leaf_junction_points<T: Real>(
    stem_skeletons: &BTreeMap<u32, Skeleton<T>>,
    crown: Vec3<T>,
) -> JunctionPoints<T> {
    let mut junctions = BTreeMap::new();
    let mut skipped = Vec::new();
    for (&instance, skeleton) in stem_skeletons {
        let endpoints = skeleton.endpoints();
        if endpoints.len() < 2 {
            skipped.push(instance);
            continue;
        }
        let position = |v: u32| skeleton.vertices()[v as usize];
        let nearest = *endpoints
            .iter()
            .min_by(|&&a, &&b| {
                position(a)
                    .distance_squared(crown)
                    .partial_cmp(&position(b).distance_squared(crown))
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            })
            .expect("at least two endpoints");
        let farthest = *endpoints
            .iter()
            .filter(|&&v| v != nearest)
            .max_by(|&&a, &&b| {
                position(a)
                    .distance_squared(crown)
                    .partial_cmp(&position(b).distance_squared(crown))
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(b.cmp(&a))
            })
            .expect("at least one endpoint besides the nearest");
        junctions.insert(instance, position(farthest));
    }
    JunctionPoints { junctions, skipped }
}

/// Minimum-cost assignment of stems to leaves.
#[derive(Clone, Debug, Serialize)]
pub struct PetioleAssignment<T = f64> {
    /// `(stem instance id, leaf temporal id, distance in mm)`.
    pub pairs: Vec<(u32, u32, T)>,
    pub unassigned_stems: Vec<u32>,
    pub unassigned_leaves: Vec<u32>,
}

/// Assigns petiole junction points to leaf centroids by minimum total
/// Euclidean distance; surplus items on either side are reported
/// unassigned.
pub fn assign_petioles<T: Real>(
    junctions: &BTreeMap<u32, Vec3<T>>,
    leaves: &BTreeMap<u32, Vec3<T>>,
) -> Result<PetioleAssignment<T>> {
    if junctions.is_empty() {
        return Err(Error::EmptyInput("no stem junction points"));
    }
    if leaves.is_empty() {
        return Err(Error::EmptyInput("no leaf centroids"));
    }
    let stem_ids: Vec<u32> = junctions.keys().copied().collect();
    let leaf_ids: Vec<u32> = leaves.keys().copied().collect();
    let cost = CostMatrix::from_fn(stem_ids.len(), leaf_ids.len(), |r, c| {
        junctions[&stem_ids[r]].distance(leaves[&leaf_ids[c]])
    });
    let assignment = hungarian(&cost)?;

    let mut pairs = Vec::new();
    let mut used_leaves = BTreeSet::new();
    let mut unassigned_stems = Vec::new();
    for (r, col) in assignment.row_to_col.iter().enumerate() {
        match col {
            Some(c) => {
                pairs.push((stem_ids[r], leaf_ids[*c], cost.get(r, *c)));
                used_leaves.insert(leaf_ids[*c]);
            }
            None => unassigned_stems.push(stem_ids[r]),
        }
    }
    let unassigned_leaves =
        leaf_ids.into_iter().filter(|id| !used_leaves.contains(id)).collect();
    Ok(PetioleAssignment { pairs, unassigned_stems, unassigned_leaves })
}

/// What a trait value describes: the whole plant, a semantic class (organ
/// counts), or one organ.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize)]
pub enum Subject {
    WholePlant,
    Class(SemanticClass),
    Organ {
        class: SemanticClass,
        id: u32,
        /// True when `id` is a temporally consistent identity rather than a
        /// per-scan instance label.
        temporal: bool,
    },
}

impl Subject {
    pub fn class(&self) -> Option<SemanticClass> {
        match self {
            Subject::WholePlant => None,
            Subject::Class(c) => Some(*c),
            Subject::Organ { class, .. } => Some(*class),
        }
    }

    pub fn organ_id(&self) -> Option<u32> {
        match self {
            Subject::Organ { id, .. } => Some(*id),
            _ => None,
        }
    }
}

impl std::fmt::Display for Subject {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Subject::WholePlant => write!(f, "plant"),
            Subject::Class(class) => write!(f, "{}", class.name()),
            Subject::Organ { class, id, temporal } => {
                write!(f, "{}/{}{}", class.name(), if *temporal { "t" } else { "i" }, id)
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraitKind {
    VolumeCm3,
    OrganCount,
    LeafAreaMm2,
    PetioleLengthMm,
}

impl TraitKind {
    pub fn name(self) -> &'static str {
        match self {
            TraitKind::VolumeCm3 => "volume",
            TraitKind::OrganCount => "organ_count",
            TraitKind::LeafAreaMm2 => "leaf_area",
            TraitKind::PetioleLengthMm => "petiole_length",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            TraitKind::VolumeCm3 => "cm3",
            TraitKind::OrganCount => "count",
            TraitKind::LeafAreaMm2 => "mm2",
            TraitKind::PetioleLengthMm => "mm",
        }
    }
}

/// One measured value for one scan date.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraitEntry {
    pub date: NaiveDate,
    pub kind: TraitKind,
    pub subject: Subject,
    pub value: f64,
    /// Advisory: set when the value dropped more than 20% against the
    /// previous scan of the same trait and subject (occlusion artefacts,
    /// not corrected).
    pub drop_flag: bool,
}

/// Traits measured on one scan, ready for series assembly.
#[derive(Clone, Debug, Default)]
pub struct ScanTraits {
    pub values: Vec<(TraitKind, Subject, f64)>,
}

/// Date-sorted per-plant series of trait values. Scan dates without any
/// annotation still appear in `scan_dates`, preserving gaps.
#[derive(Clone, Debug, Serialize)]
pub struct TraitTimeSeries {
    pub plant_id: String,
    pub scan_dates: Vec<NaiveDate>,
    pub entries: Vec<TraitEntry>,
}

/// Fractional drop between consecutive values that raises the advisory
/// flag.
pub const DROP_FLAG_THRESHOLD: f64 = 0.20;

/// Merges per-scan traits into a date-sorted series.
///
/// All scans must belong to one plant; duplicate dates for the same
/// `(trait, subject)` are an error. Decreasing values are kept as measured
/// and only flagged.
pub fn build_time_series(
    scans: &[(LabeledPointCloud, ScanTraits)],
) -> Result<TraitTimeSeries> {
    if scans.is_empty() {
        return Err(Error::EmptyInput("no scans"));
    }
    let mut plant_id: Option<String> = None;
    for (cloud, _) in scans {
        let id = cloud.plant_id.clone().unwrap_or_default();
        match &plant_id {
            None => plant_id = Some(id),
            Some(existing) if *existing != id => {
                return Err(Error::MixedPlants { first: existing.clone(), second: id })
            }
            _ => {}
        }
    }
    let plant_id = plant_id.unwrap_or_default();

    let mut scan_dates: Vec<NaiveDate> = Vec::new();
    let mut raw: Vec<TraitEntry> = Vec::new();
    for (cloud, traits) in scans {
        let date = cloud.scan_date.ok_or_else(|| {
            Error::InvalidParams("scan has no parseable date for the time series".into())
        })?;
        scan_dates.push(date);
        for (kind, subject, value) in &traits.values {
            raw.push(TraitEntry {
                date,
                kind: *kind,
                subject: *subject,
                value: *value,
                drop_flag: false,
            });
        }
    }
    scan_dates.sort_unstable();
    scan_dates.dedup();

    from_entries(plant_id, scan_dates, raw)
}

/// Assembles (or re-assembles) a series from loose entries; used both by
/// [`build_time_series`] and when round-tripping a series through its own
/// output.
pub fn from_entries(
    plant_id: String,
    scan_dates: Vec<NaiveDate>,
    mut entries: Vec<TraitEntry>,
) -> Result<TraitTimeSeries> {
    entries.sort_by(|a, b| {
        (a.date, a.kind, a.subject).cmp(&(b.date, b.kind, b.subject))
    });
    for pair in entries.windows(2) {
        if pair[0].date == pair[1].date
            && pair[0].kind == pair[1].kind
            && pair[0].subject == pair[1].subject
        {
            return Err(Error::DuplicateDate {
                date: pair[0].date,
                trait_name: pair[0].kind.name().to_string(),
                subject: pair[0].subject.to_string(),
            });
        }
    }

    // Advisory drop flags over consecutive scans per (trait, subject).
    let mut last: BTreeMap<(TraitKind, Subject), f64> = BTreeMap::new();
    let mut by_date = entries;
    by_date.sort_by(|a, b| (a.kind, a.subject, a.date).cmp(&(b.kind, b.subject, b.date)));
    for e in &mut by_date {
        let key = (e.kind, e.subject);
        if let Some(prev) = last.get(&key) {
            e.drop_flag = *prev > 0.0 && (prev - e.value) / prev > real::<f64>(DROP_FLAG_THRESHOLD);
        }
        last.insert(key, e.value);
    }
    by_date.sort_by(|a, b| (a.date, a.kind, a.subject).cmp(&(b.date, b.kind, b.subject)));

    Ok(TraitTimeSeries { plant_id, scan_dates, entries: by_date })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::LabeledPoint;
    use approx::assert_relative_eq;

    fn labeled_point(pos: Vec3<f64>, class: SemanticClass, instance: u32) -> LabeledPoint {
        LabeledPoint { position: pos, color: [0; 3], class: Some(class), instance: Some(instance), temporal_id: None }
    }

    #[test]
    fn organ_counts_by_distinct_instance() {
        let mut points = Vec::new();
        for (class, ids) in [
            (SemanticClass::Leaf, vec![1u32, 2, 3, 3, 2]),
            (SemanticClass::Stem, vec![1, 1, 2]),
            (SemanticClass::Background, vec![1, 2, 3]),
        ] {
            for id in ids {
                points.push(labeled_point(Vec3::zero(), class, id));
            }
        }
        let cloud = LabeledPointCloud::new(points);
        let counts = organ_counts(&cloud).unwrap();
        assert_eq!(counts[&SemanticClass::Leaf], 3);
        assert_eq!(counts[&SemanticClass::Stem], 2);
        assert!(!counts.contains_key(&SemanticClass::Background));
        let total: usize = counts.values().sum();
        assert_eq!(total, 5);
    }

    #[test]
    fn organ_counts_empty_after_exclusion() {
        let cloud = LabeledPointCloud::new(vec![labeled_point(
            Vec3::zero(),
            SemanticClass::ScanningTable,
            1,
        )]);
        assert!(organ_counts(&cloud).unwrap().is_empty());
    }

    #[test]
    fn crown_anchor_is_the_centroid() {
        let cloud = LabeledPointCloud::new(vec![
            labeled_point(Vec3::new(1.0, 0.0, 0.0), SemanticClass::Crown, 1),
            labeled_point(Vec3::new(-1.0, 0.0, 0.0), SemanticClass::Crown, 1),
        ]);
        assert_relative_eq!(crown_anchor(&cloud).unwrap().distance(Vec3::zero()), 0.0);

        let single = LabeledPointCloud::new(vec![labeled_point(
            Vec3::new(3.0, 4.0, 5.0),
            SemanticClass::Crown,
            1,
        )]);
        assert_eq!(crown_anchor(&single).unwrap(), Vec3::new(3.0, 4.0, 5.0));

        let none = LabeledPointCloud::new(vec![labeled_point(Vec3::zero(), SemanticClass::Leaf, 1)]);
        assert!(matches!(crown_anchor(&none), Err(Error::NoCrownPoints)));
    }

    #[test]
    fn junction_is_far_endpoint() {
        let crown = Vec3::zero();
        let chain = Skeleton::chain(vec![
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(25.0, 0.0, 0.0),
            Vec3::new(50.0, 0.0, 0.0),
        ])
        .unwrap();
        let mut skeletons = BTreeMap::new();
        skeletons.insert(1u32, chain);
        let result = leaf_junction_points(&skeletons, crown);
        assert_eq!(result.junctions[&1], Vec3::new(50.0, 0.0, 0.0));
        assert!(result.skipped.is_empty());
    }

    #[test]
    fn branched_skeleton_takes_farthest_survivor() {
        let crown = Vec3::zero();
        // Y shape: endpoints at distances 2, 30, 40 from the crown.
        let skel = Skeleton::new(
            vec![
                Vec3::new(2.0, 0.0, 0.0),
                Vec3::new(10.0, 0.0, 0.0),
                Vec3::new(30.0, 0.0, 0.0),
                Vec3::new(0.0, 40.0, 0.0),
            ],
            vec![(0, 1), (1, 2), (1, 3)],
        )
        .unwrap();
        let mut skeletons = BTreeMap::new();
        skeletons.insert(7u32, skel);
        let result = leaf_junction_points(&skeletons, crown);
        assert_eq!(result.junctions[&7], Vec3::new(0.0, 40.0, 0.0));
    }

    #[test]
    fn cycle_skeleton_is_skipped() {
        let cycle = Skeleton::new(
            vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![(0, 1), (1, 2), (0, 2)],
        )
        .unwrap();
        let mut skeletons = BTreeMap::new();
        skeletons.insert(3u32, cycle);
        let result = leaf_junction_points(&skeletons, Vec3::zero());
        assert!(result.junctions.is_empty());
        assert_eq!(result.skipped, vec![3]);
    }

    #[test]
    fn petiole_assignment_example() {
        let mut junctions = BTreeMap::new();
        junctions.insert(1u32, Vec3::new(0.0, 0.0, 0.0));
        junctions.insert(2u32, Vec3::new(10.0, 0.0, 0.0));
        let mut leaves = BTreeMap::new();
        leaves.insert(101u32, Vec3::new(1.0, 0.0, 0.0));
        leaves.insert(102u32, Vec3::new(9.0, 0.0, 0.0));
        let result = assign_petioles(&junctions, &leaves).unwrap();
        assert_eq!(result.pairs.len(), 2);
        assert_eq!(result.pairs[0].0, 1);
        assert_eq!(result.pairs[0].1, 101);
        assert_eq!(result.pairs[1].0, 2);
        assert_eq!(result.pairs[1].1, 102);
        let total: f64 = result.pairs.iter().map(|p| p.2).sum();
        assert_relative_eq!(total, 2.0);
    }

    #[test]
    fn surplus_leaves_are_reported() {
        let mut junctions = BTreeMap::new();
        junctions.insert(1u32, Vec3::new(0.0, 0.0, 0.0));
        junctions.insert(2u32, Vec3::new(10.0, 0.0, 0.0));
        let mut leaves = BTreeMap::new();
        leaves.insert(5u32, Vec3::new(0.5, 0.0, 0.0));
        leaves.insert(6u32, Vec3::new(9.5, 0.0, 0.0));
        leaves.insert(7u32, Vec3::new(100.0, 0.0, 0.0));
        let result = assign_petioles(&junctions, &leaves).unwrap();
        assert_eq!(result.pairs.len(), 2);
        assert_eq!(result.unassigned_leaves, vec![7]);
        assert!(result.unassigned_stems.is_empty());
    }

    #[test]
    fn identical_point_sets_assign_at_zero_cost() {
        let mut junctions = BTreeMap::new();
        let mut leaves = BTreeMap::new();
        for i in 0..4u32 {
            let p = Vec3::new(i as f64 * 3.0, 1.0, 2.0);
            junctions.insert(i, p);
            leaves.insert(i + 10, p);
        }
        let result = assign_petioles(&junctions, &leaves).unwrap();
        for (stem, leaf, cost) in result.pairs {
            assert_eq!(stem + 10, leaf);
            assert_relative_eq!(cost, 0.0);
        }
    }

    fn scan(plant: &str, date: (i32, u32, u32), traits: Vec<(TraitKind, Subject, f64)>) -> (LabeledPointCloud, ScanTraits) {
        let mut cloud =
            LabeledPointCloud::new(vec![LabeledPoint::unlabeled(Vec3::zero())]);
        cloud.plant_id = Some(plant.to_string());
        cloud.scan_date = NaiveDate::from_ymd_opt(date.0, date.1, date.2);
        (cloud, ScanTraits { values: traits })
    }

    #[test]
    fn series_is_sorted_and_flags_drops() {
        let scans = vec![
            scan("A2", (2022, 5, 27), vec![(TraitKind::VolumeCm3, Subject::WholePlant, 50.0)]),
            scan("A2", (2022, 5, 13), vec![(TraitKind::VolumeCm3, Subject::WholePlant, 80.0)]),
            scan("A2", (2022, 6, 3), vec![(TraitKind::VolumeCm3, Subject::WholePlant, 49.0)]),
        ];
        let series = build_time_series(&scans).unwrap();
        assert_eq!(series.plant_id, "A2");
        let dates: Vec<_> = series.entries.iter().map(|e| e.date).collect();
        assert!(dates.windows(2).all(|w| w[0] <= w[1]));
        // 80 -> 50 is a >20% drop; 50 -> 49 is not.
        assert!(!series.entries[0].drop_flag);
        assert!(series.entries[1].drop_flag);
        assert!(!series.entries[2].drop_flag);
    }

    #[test]
    fn mixed_plants_are_rejected() {
        let scans = vec![
            scan("A2", (2022, 5, 13), vec![]),
            scan("B1", (2022, 5, 20), vec![]),
        ];
        assert!(matches!(build_time_series(&scans), Err(Error::MixedPlants { .. })));
    }

    #[test]
    fn duplicate_date_is_rejected() {
        let subject = Subject::WholePlant;
        let scans = vec![
            scan("A2", (2022, 5, 13), vec![(TraitKind::VolumeCm3, subject, 1.0)]),
            scan("A2", (2022, 5, 13), vec![(TraitKind::VolumeCm3, subject, 2.0)]),
        ];
        assert!(matches!(build_time_series(&scans), Err(Error::DuplicateDate { .. })));
    }

    #[test]
    fn rebuilding_from_own_entries_is_identity() {
        let leaf = Subject::Organ { class: SemanticClass::Leaf, id: 6, temporal: true };
        let scans = vec![
            scan("A2", (2022, 5, 13), vec![
                (TraitKind::VolumeCm3, Subject::WholePlant, 85.95),
                (TraitKind::LeafAreaMm2, leaf, 400.0),
            ]),
            scan("A2", (2022, 5, 20), vec![
                (TraitKind::VolumeCm3, Subject::WholePlant, 99.0),
                (TraitKind::LeafAreaMm2, leaf, 450.0),
            ]),
        ];
        let series = build_time_series(&scans).unwrap();
        let rebuilt = from_entries(
            series.plant_id.clone(),
            series.scan_dates.clone(),
            series.entries.clone(),
        )
        .unwrap();
        assert_eq!(rebuilt.entries, series.entries);
        assert_eq!(rebuilt.scan_dates, series.scan_dates);
    }

    #[test]
    fn gap_dates_are_preserved() {
        let scans = vec![
            scan("A2", (2022, 5, 13), vec![(TraitKind::VolumeCm3, Subject::WholePlant, 10.0)]),
            scan("A2", (2022, 5, 20), vec![]), // unannotated scan
            scan("A2", (2022, 5, 27), vec![(TraitKind::VolumeCm3, Subject::WholePlant, 20.0)]),
        ];
        let series = build_time_series(&scans).unwrap();
        assert_eq!(series.scan_dates.len(), 3);
        assert_eq!(series.entries.len(), 2);
    }
}
