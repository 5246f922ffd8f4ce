//! 1D self-organizing map fitted to a stem cloud.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::SkeletonParams;
use crate::cloud::LabeledPointCloud;
use crate::error::{Error, Result};
use crate::geom::{centroid, covariance3, symmetric_eigen3, Vec3};
use crate::scalar::{real, real_from_usize, Real};
use crate::skeleton::Skeleton;

/// First principal direction of the points, oriented so the point with the
/// largest absolute projection projects positively. That anchor is a
/// property of the data, keeping the chain orientation covariant under
/// rigid motions of the input.
fn principal_axis<T: Real>(points: &[Vec3<T>], center: Vec3<T>) -> Vec3<T> {
    let (_, vectors) = symmetric_eigen3(covariance3(points));
    let axis = vectors[0];
    let mut extreme = T::zero();
    for p in points {
        let t = (*p - center).dot(axis);
        if t.abs() > extreme.abs() {
            extreme = t;
        }
    }
    if extreme < T::zero() {
        -axis
    } else {
        axis
    }
}

/// Fits a 1D self-organizing map to the stem points and returns the node
/// chain as a skeleton.
///
/// The node count is `max(som_min_nodes, round(som_fraction * N))`. Nodes
/// start evenly spaced along the first principal axis and are trained with
/// an exponentially decaying learning rate and Gaussian (index-space)
/// neighbourhood, sample order shuffled by the seeded generator. The chain
/// topology makes the result a single segment with two endpoints by
/// construction; output is deterministic for a fixed seed.
pub fn som_skeleton<T: Real>(
    stem: &LabeledPointCloud<T>,
    params: &SkeletonParams<T>,
) -> Result<Skeleton<T>> {
    params.validate()?;
    let points = stem.positions();
    if points.len() < params.som_min_nodes {
        return Err(Error::TooFewPoints { needed: params.som_min_nodes, got: points.len() });
    }

    let fraction_nodes = (params.som_fraction * real_from_usize(points.len()))
        .round()
        .to_usize()
        .unwrap_or(0);
    let n_nodes = fraction_nodes.max(params.som_min_nodes);

    // Initialise along the principal axis, spanning the projection range.
    let center = centroid(&points);
    let axis = principal_axis(&points, center);
    let (mut t_min, mut t_max) = (T::infinity(), T::neg_infinity());
    for p in &points {
        let t = (*p - center).dot(axis);
        t_min = t_min.min(t);
        t_max = t_max.max(t);
    }
    let span = t_max - t_min;
    let mut nodes: Vec<Vec3<T>> = (0..n_nodes)
        .map(|j| {
            let f = real_from_usize::<T>(j) / real_from_usize(n_nodes - 1);
            center + axis * (t_min + span * f)
        })
        .collect();

    let (lr0, lr1) = params.som_learning_rate;
    let sigma0 = (real_from_usize::<T>(n_nodes) / real(4.0)).max(params.som_sigma_final);
    let sigma1 = params.som_sigma_final;
    let epochs = params.som_epochs;
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut order: Vec<usize> = (0..points.len()).collect();

    for epoch in 0..epochs {
        let progress = if epochs > 1 {
            real_from_usize::<T>(epoch) / real_from_usize(epochs - 1)
        } else {
            T::zero()
        };
        let lr = lr0 * (lr1 / lr0).powf(progress);
        let sigma = sigma0 * (sigma1 / sigma0).powf(progress);
        // Updates beyond 3 sigma are negligible; clamp the window.
        let window = (sigma * real(3.0)).ceil().to_isize().unwrap_or(1).max(1);
        let two_sigma_sq = real::<T>(2.0) * sigma * sigma;

        order.shuffle(&mut rng);
        for &pi in &order {
            let x = points[pi];
            let mut bmu = 0usize;
            let mut best = x.distance_squared(nodes[0]);
            for (j, node) in nodes.iter().enumerate().skip(1) {
                let d = x.distance_squared(*node);
                if d < best {
                    best = d;
                    bmu = j;
                }
            }
            let lo = bmu.saturating_sub(window as usize);
            let hi = (bmu + window as usize).min(n_nodes - 1);
            for (j, node) in nodes.iter_mut().enumerate().take(hi + 1).skip(lo) {
                let di = real_from_usize::<T>(j.abs_diff(bmu));
                let h = (-(di * di) / two_sigma_sq).exp();
                *node = *node + (x - *node) * (lr * h);
            }
        }
    }

    // Batch refinement with an annealed neighbourhood: the online phase
    // leaves end nodes pulled towards their neighbours; cooling the
    // neighbourhood to zero over deterministic batch updates settles each
    // node at the mean of its catchment instead.
    let polish = params.som_refine_iters;
    let refine_sigma0 = sigma0.max(T::one());
    for it in 0..polish {
        let progress = if polish > 1 {
            real_from_usize::<T>(it) / real_from_usize(polish - 1)
        } else {
            T::one()
        };
        let sigma = (refine_sigma0 * (real::<T>(0.01) / refine_sigma0).powf(progress)).max(real(1e-6));
        let two_sigma_sq = real::<T>(2.0) * sigma * sigma;
        let window = (sigma * real(3.0)).ceil().to_usize().unwrap_or(0);

        let mut sums = vec![Vec3::<T>::zero(); n_nodes];
        let mut counts = vec![0usize; n_nodes];
        for &x in &points {
            let mut bmu = 0usize;
            let mut best = x.distance_squared(nodes[0]);
            for (j, node) in nodes.iter().enumerate().skip(1) {
                let d = x.distance_squared(*node);
                if d < best {
                    best = d;
                    bmu = j;
                }
            }
            sums[bmu] += x;
            counts[bmu] += 1;
        }
        let mut moved = T::zero();
        for j in 0..n_nodes {
            let lo = j.saturating_sub(window);
            let hi = (j + window).min(n_nodes - 1);
            let mut weighted = Vec3::<T>::zero();
            let mut weight = T::zero();
            for (k, sum) in sums.iter().enumerate().take(hi + 1).skip(lo) {
                if counts[k] == 0 {
                    continue;
                }
                let di = real_from_usize::<T>(j.abs_diff(k));
                let h = (-(di * di) / two_sigma_sq).exp();
                weighted += *sum * h;
                weight += h * real_from_usize(counts[k]);
            }
            if weight > T::zero() {
                let mean = weighted / weight;
                moved = moved.max(nodes[j].distance(mean));
                nodes[j] = mean;
            }
        }
        if moved < real(1e-12) {
            break;
        }
    }

    Skeleton::chain(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::LabeledPoint;
    use crate::geom::Rigid;
    use rand::prelude::*;

    fn cloud_of(points: Vec<Vec3<f64>>) -> LabeledPointCloud {
        LabeledPointCloud::new(points.into_iter().map(LabeledPoint::unlabeled).collect())
    }

    fn line_points(n: usize, length: f64) -> Vec<Vec3<f64>> {
        (0..n).map(|i| Vec3::new(0.0, 0.0, i as f64 / (n - 1) as f64 * length)).collect()
    }

    #[test]
    fn line_fit_recovers_length() {
        let cloud = cloud_of(line_points(1000, 100.0));
        let skel = som_skeleton(&cloud, &SkeletonParams::default()).unwrap();
        assert_eq!(skel.vertex_count(), 10); // 0.01 * 1000
        assert_eq!(skel.edge_count(), 9);
        assert_eq!(skel.segment_count(), 1);
        assert_eq!(skel.endpoints().len(), 2);
        // Any chain of cell means truncates half a cell per end, so 10
        // nodes on a uniform line cap out at ~90.1 mm; converged runs land
        // within a fifth of a percent of that ideal.
        let total = skel.total_length();
        assert!((total - 100.0).abs() / 100.0 < 0.102, "chain length {total}");
    }

    #[test]
    fn node_count_clamps_to_minimum() {
        let cloud = cloud_of(line_points(100, 10.0));
        let params = SkeletonParams { som_min_nodes: 5, ..SkeletonParams::default() };
        // round(0.01 * 100) = 1 < 5.
        let skel = som_skeleton(&cloud, &params).unwrap();
        assert_eq!(skel.vertex_count(), 5);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let cloud = cloud_of(vec![Vec3::zero()]);
        assert!(matches!(
            som_skeleton(&cloud, &SkeletonParams::default()),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let points: Vec<Vec3<f64>> = (0..600)
            .map(|i| {
                Vec3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    i as f64 * 0.1,
                )
            })
            .collect();
        let cloud = cloud_of(points);
        let params = SkeletonParams { rng_seed: 3, ..SkeletonParams::default() };
        let a = som_skeleton(&cloud, &params).unwrap();
        let b = som_skeleton(&cloud, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chain_topology_always() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let n = rng.random_range(50..400);
            let points: Vec<Vec3<f64>> = (0..n)
                .map(|_| {
                    Vec3::new(
                        rng.random_range(-20.0..20.0),
                        rng.random_range(-20.0..20.0),
                        rng.random_range(-20.0..20.0),
                    )
                })
                .collect();
            let params = SkeletonParams { som_min_nodes: 4, ..SkeletonParams::default() };
            let skel = som_skeleton(&cloud_of(points), &params).unwrap();
            assert_eq!(skel.segment_count(), 1);
            assert_eq!(skel.endpoints().len(), 2);
        }
    }

    #[test]
    fn rigid_covariance_with_same_seed() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let points: Vec<Vec3<f64>> = (0..500)
            .map(|i| {
                Vec3::new(
                    rng.random_range(-1.5..1.5),
                    rng.random_range(-1.5..1.5),
                    i as f64 * 0.2,
                )
            })
            .collect();
        let params = SkeletonParams { rng_seed: 11, ..SkeletonParams::default() };
        let skel = som_skeleton(&cloud_of(points.clone()), &params).unwrap();

        let t = Rigid::from_axis_angle(Vec3::new(0.2, 1.0, -0.3), 0.7, Vec3::new(5.0, 9.0, -2.0));
        let moved: Vec<Vec3<f64>> = points.iter().map(|&p| t.apply(p)).collect();
        let skel_t = som_skeleton(&cloud_of(moved), &params).unwrap();

        assert_eq!(skel.vertex_count(), skel_t.vertex_count());
        for (a, b) in skel.vertices().iter().zip(skel_t.vertices()) {
            assert!(t.apply(*a).distance(*b) < 1e-9, "node moved by {}", t.apply(*a).distance(*b));
        }
    }
}
