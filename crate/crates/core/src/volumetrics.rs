//! Plant volume estimation by voxel-grid occupancy.

use std::collections::BTreeSet;

use crate::cloud::{LabeledPointCloud, SemanticClass};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::scalar::{real, real_from_usize, Real};

/// Occupancy grid of cubic voxels anchored at the filtered cloud's minimum
/// corner.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid<T = f64> {
    pub origin: Vec3<T>,
    /// Voxel edge length in millimetres.
    pub resolution: T,
    pub occupied: BTreeSet<(i64, i64, i64)>,
}

impl<T: Real> VoxelGrid<T> {
    pub fn occupied_count(&self) -> usize {
        self.occupied.len()
    }

    /// Occupied volume in cubic millimetres.
    pub fn volume_mm3(&self) -> T {
        real_from_usize::<T>(self.occupied.len()) * self.resolution * self.resolution * self.resolution
    }
}

/// Discretises a cloud into a voxel grid, ignoring points of the excluded
/// classes. A point occupies `floor((p - origin) / resolution)` per
/// component, with the origin at the component-wise minimum of the points
/// that survive exclusion.
pub fn voxelize<T: Real>(
    cloud: &LabeledPointCloud<T>,
    resolution: T,
    exclude: &[SemanticClass],
) -> Result<VoxelGrid<T>> {
    if !(resolution > T::zero()) {
        return Err(Error::InvalidParams("voxel resolution must be positive".into()));
    }
    let included: Vec<Vec3<T>> = cloud
        .points
        .iter()
        .filter(|p| p.class.map(|c| !exclude.contains(&c)).unwrap_or(true))
        .map(|p| p.position)
        .collect();
    if included.is_empty() {
        return Err(Error::EmptyAfterFilter);
    }

    let mut origin = included[0];
    for p in &included[1..] {
        origin = origin.min_components(*p);
    }

    let mut occupied = BTreeSet::new();
    for p in &included {
        let rel = (*p - origin) / resolution;
        let idx = (
            rel.x.floor().to_i64().unwrap_or(0),
            rel.y.floor().to_i64().unwrap_or(0),
            rel.z.floor().to_i64().unwrap_or(0),
        );
        occupied.insert(idx);
    }
    Ok(VoxelGrid { origin, resolution, occupied })
}

/// Total occupied volume in cubic centimetres.
pub fn plant_volume<T: Real>(grid: &VoxelGrid<T>) -> T {
    grid.volume_mm3() / real(1000.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::LabeledPoint;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cloud_of(positions: Vec<Vec3<f64>>) -> LabeledPointCloud {
        LabeledPointCloud::new(positions.into_iter().map(LabeledPoint::unlabeled).collect())
    }

    #[test]
    fn single_point_is_one_voxel() {
        let cloud = cloud_of(vec![Vec3::new(3.7, -1.2, 0.4)]);
        let grid = voxelize(&cloud, 1.0, &[]).unwrap();
        assert_eq!(grid.occupied_count(), 1);
        assert_relative_eq!(grid.volume_mm3(), 1.0);
        assert_relative_eq!(plant_volume(&grid), 0.001);
    }

    #[test]
    fn cube_corners_occupy_eight_voxels() {
        // Corners of a 10 mm cube; the (10,10,10) corner lands in voxel
        // index (10,10,10).
        let mut corners = Vec::new();
        for &x in &[0.0, 10.0] {
            for &y in &[0.0, 10.0] {
                for &z in &[0.0, 10.0] {
                    corners.push(Vec3::new(x, y, z));
                }
            }
        }
        let grid = voxelize(&cloud_of(corners), 1.0, &[]).unwrap();
        assert_eq!(grid.occupied_count(), 8);
        assert!(grid.occupied.contains(&(10, 10, 10)));
        assert_relative_eq!(grid.volume_mm3(), 8.0);
    }

    #[test]
    fn thousand_voxels_make_one_cubic_centimetre() {
        let mut positions = Vec::new();
        for x in 0..10 {
            for y in 0..10 {
                for z in 0..10 {
                    positions.push(Vec3::new(x as f64 + 0.5, y as f64 + 0.5, z as f64 + 0.5));
                }
            }
        }
        let grid = voxelize(&cloud_of(positions), 1.0, &[]).unwrap();
        assert_eq!(grid.occupied_count(), 1000);
        assert_relative_eq!(plant_volume(&grid), 1.0);
    }

    #[test]
    fn excluded_classes_are_ignored() {
        let mut points: Vec<LabeledPoint> = Vec::new();
        for i in 0..5 {
            points.push(LabeledPoint {
                position: Vec3::new(i as f64 * 2.0, 0.0, 0.0),
                color: [0; 3],
                class: Some(SemanticClass::Stem),
                instance: Some(1),
                temporal_id: None,
            });
        }
        points.push(LabeledPoint {
            position: Vec3::new(100.0, 100.0, 100.0),
            color: [0; 3],
            class: Some(SemanticClass::Background),
            instance: Some(1),
            temporal_id: None,
        });
        let cloud = LabeledPointCloud::new(points);
        let grid = voxelize(&cloud, 1.0, &SemanticClass::default_exclusions()).unwrap();
        assert_eq!(grid.occupied_count(), 5);
        // Excluding everything leaves nothing to voxelise.
        let err = voxelize(&cloud, 1.0, &SemanticClass::ALL).unwrap_err();
        assert!(matches!(err, Error::EmptyAfterFilter));
    }

    #[test]
    fn dense_cube_volume_within_ten_percent() {
        // 20r-sided solid sampled on a half-open lattice at half-resolution
        // steps (the far boundary belongs to the next solid over).
        let mut positions = Vec::new();
        let step = 0.5;
        let n = (20.0 / step) as i64;
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    positions.push(Vec3::new(x as f64 * step, y as f64 * step, z as f64 * step));
                }
            }
        }
        let grid = voxelize(&cloud_of(positions), 1.0, &[]).unwrap();
        let expected = 20.0f64.powi(3);
        let got = grid.volume_mm3();
        assert!((got - expected).abs() / expected < 0.10, "volume {got} vs {expected}");
    }

    proptest! {
        #[test]
        fn adding_points_never_decreases_occupancy(
            n in 1usize..60,
            extra in 1usize..20,
            seed in 0u64..1000,
        ) {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut positions: Vec<Vec3<f64>> = (0..n)
                .map(|_| Vec3::new(
                    rng.random_range(-20.0..20.0),
                    rng.random_range(-20.0..20.0),
                    rng.random_range(-20.0..20.0),
                ))
                .collect();
            let base = voxelize(&cloud_of(positions.clone()), 1.0, &[]).unwrap();
            for _ in 0..extra {
                positions.push(Vec3::new(
                    rng.random_range(-20.0..20.0),
                    rng.random_range(-20.0..20.0),
                    rng.random_range(-20.0..20.0),
                ));
            }
            let grown = voxelize(&cloud_of(positions), 1.0, &[]).unwrap();
            prop_assert!(grown.occupied_count() >= base.occupied_count());
        }

        #[test]
        fn translation_by_resolution_multiples_preserves_count(
            n in 1usize..80,
            shift in -8i64..8,
            seed in 0u64..1000,
        ) {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            // Points on an exactly representable lattice so the translation
            // is exact in floating point.
            let positions: Vec<Vec3<f64>> = (0..n)
                .map(|_| Vec3::new(
                    rng.random_range(-64i64..64) as f64 * 0.25,
                    rng.random_range(-64i64..64) as f64 * 0.25,
                    rng.random_range(-64i64..64) as f64 * 0.25,
                ))
                .collect();
            let resolution = 0.5;
            let delta = shift as f64 * resolution;
            let moved: Vec<Vec3<f64>> = positions
                .iter()
                .map(|p| *p + Vec3::new(delta, 2.0 * delta, -delta))
                .collect();
            let a = voxelize(&cloud_of(positions), resolution, &[]).unwrap();
            let b = voxelize(&cloud_of(moved), resolution, &[]).unwrap();
            prop_assert_eq!(a.occupied_count(), b.occupied_count());
        }

        #[test]
        fn halving_resolution_bounded_by_eight_fold(
            n in 1usize..80,
            seed in 0u64..1000,
        ) {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let positions: Vec<Vec3<f64>> = (0..n)
                .map(|_| Vec3::new(
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                ))
                .collect();
            let coarse = voxelize(&cloud_of(positions.clone()), 1.0, &[]).unwrap();
            let fine = voxelize(&cloud_of(positions), 0.5, &[]).unwrap();
            prop_assert!(fine.occupied_count() <= 8 * coarse.occupied_count());
        }
    }
}
