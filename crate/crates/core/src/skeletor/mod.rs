//! Stem skeleton estimation from point clouds.
//!
//! Two estimators are provided: a geodesic-binning method (single-source
//! shortest paths over a k-NN graph, nodes binned by geodesic distance,
//! clusters collapsed to centroids) and a 1D self-organizing map trained
//! into a chain. Skeleton geometry queries (endpoints, segments, longest
//! path) live on [`Skeleton`].

mod som;

pub use som::som_skeleton;

use crate::cloud::LabeledPointCloud;
use crate::error::{Error, Result};
use crate::geom::{centroid, Vec3};
use crate::kdtree::KdTree;
use crate::scalar::{real, real_from_usize, Real};
use crate::skeleton::Skeleton;

/// Parameters shared by the skeleton estimators.
#[derive(Clone, Copy, Debug)]
pub struct SkeletonParams<T = f64> {
    /// Number of equal geodesic-distance intervals for the shortest-path
    /// method.
    pub bin_count: usize,
    /// Root position; `None` selects the point with the lowest vertical
    /// coordinate.
    pub root: Option<Vec3<T>>,
    /// Neighbour count for the k-NN graph.
    pub knn: usize,
    /// SOM node count as a fraction of the point count.
    pub som_fraction: T,
    /// Lower clamp on the SOM node count.
    pub som_min_nodes: usize,
    pub som_epochs: usize,
    /// Learning rate (initial, final), decayed exponentially per epoch.
    pub som_learning_rate: (T, T),
    /// Final neighbourhood sigma; the initial value is `n_nodes / 4`.
    pub som_sigma_final: T,
    /// Deterministic annealed batch iterations after online training (0
    /// disables). Cools the neighbourhood to zero so nodes settle at the
    /// means of their assigned points, which the decayed-but-nonzero final
    /// sigma alone cannot reach.
    pub som_refine_iters: usize,
    pub rng_seed: u64,
}

impl<T: Real> Default for SkeletonParams<T> {
    fn default() -> Self {
        Self {
            bin_count: 10,
            root: None,
            knn: 10,
            som_fraction: real(0.01),
            som_min_nodes: 2,
            som_epochs: 200,
            som_learning_rate: (real(0.5), real(0.01)),
            som_sigma_final: real(0.5),
            som_refine_iters: 60,
            rng_seed: 0,
        }
    }
}

impl<T: Real> SkeletonParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.bin_count == 0 {
            return Err(Error::InvalidParams("bin_count must be at least 1".into()));
        }
        if self.knn == 0 {
            return Err(Error::InvalidParams("knn must be at least 1".into()));
        }
        if !(self.som_fraction > T::zero() && self.som_fraction <= T::one()) {
            return Err(Error::InvalidParams("som_fraction must lie in (0, 1]".into()));
        }
        if self.som_min_nodes < 2 {
            return Err(Error::InvalidParams("som_min_nodes must be at least 2".into()));
        }
        if self.som_epochs == 0 {
            return Err(Error::InvalidParams("som_epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Symmetrised k-NN graph over a point set, weighted by Euclidean distance.
pub struct NeighborhoodGraph<T = f64> {
    node_count: usize,
    adjacency: Vec<Vec<(u32, T)>>,
}

impl<T: Real> NeighborhoodGraph<T> {
    /// Connects every point to its `k` nearest neighbours and symmetrises
    /// the result.
    pub fn build_knn(points: &[Vec3<T>], k: usize) -> Self {
        let tree = KdTree::build(points);
        let mut edge_set = std::collections::BTreeSet::new();
        for (i, &p) in points.iter().enumerate() {
            for (j, _) in tree.nearest(p, k + 1) {
                if j != i {
                    edge_set.insert((i.min(j) as u32, i.max(j) as u32));
                }
            }
        }
        let mut adjacency = vec![Vec::new(); points.len()];
        for (a, b) in edge_set {
            let w = points[a as usize].distance(points[b as usize]);
            adjacency[a as usize].push((b, w));
            adjacency[b as usize].push((a, w));
        }
        Self { node_count: points.len(), adjacency }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn neighbors(&self, node: u32) -> &[(u32, T)] {
        &self.adjacency[node as usize]
    }

    /// Component label per node, labelled in order of lowest contained node.
    pub fn component_labels(&self) -> Vec<u32> {
        let mut label = vec![u32::MAX; self.node_count];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..self.node_count {
            if label[start] != u32::MAX {
                continue;
            }
            label[start] = next;
            stack.push(start as u32);
            while let Some(v) = stack.pop() {
                for &(w, _) in &self.adjacency[v as usize] {
                    if label[w as usize] == u32::MAX {
                        label[w as usize] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Dijkstra from `source`; unreachable nodes stay at infinity.
    pub fn geodesic_from(&self, source: u32) -> (Vec<T>, Vec<u32>) {
        use std::cmp::Ordering;
        use std::collections::BinaryHeap;

        struct Entry<T>(T, u32);
        impl<T: Real> PartialEq for Entry<T> {
            fn eq(&self, o: &Self) -> bool {
                self.0 == o.0 && self.1 == o.1
            }
        }
        impl<T: Real> Eq for Entry<T> {}
        impl<T: Real> PartialOrd for Entry<T> {
            fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
                Some(self.cmp(o))
            }
        }
        impl<T: Real> Ord for Entry<T> {
            fn cmp(&self, o: &Self) -> Ordering {
                o.0.partial_cmp(&self.0).unwrap_or(Ordering::Equal).then_with(|| o.1.cmp(&self.1))
            }
        }

        let mut dist = vec![T::infinity(); self.node_count];
        let mut pred = vec![u32::MAX; self.node_count];
        let mut heap = BinaryHeap::new();
        dist[source as usize] = T::zero();
        heap.push(Entry(T::zero(), source));
        while let Some(Entry(d, v)) = heap.pop() {
            if d > dist[v as usize] {
                continue;
            }
            for &(w, len) in &self.adjacency[v as usize] {
                let nd = d + len;
                if nd < dist[w as usize] {
                    dist[w as usize] = nd;
                    pred[w as usize] = v;
                    heap.push(Entry(nd, w));
                }
            }
        }
        (dist, pred)
    }
}

/// Lowest-z point, the automatic root placement. Ties resolve to the lowest
/// index.
fn auto_root<T: Real>(points: &[Vec3<T>]) -> Vec3<T> {
    let mut best = 0;
    for (i, p) in points.iter().enumerate().skip(1) {
        if p.z < points[best].z {
            best = i;
        }
    }
    points[best]
}

fn nearest_node_to<T: Real>(points: &[Vec3<T>], nodes: &[u32], target: Vec3<T>) -> u32 {
    let mut best = nodes[0];
    let mut best_d = points[best as usize].distance_squared(target);
    for &n in &nodes[1..] {
        let d = points[n as usize].distance_squared(target);
        if d < best_d || (d == best_d && n < best) {
            best = n;
            best_d = d;
        }
    }
    best
}

/// Skeletonises a stem cloud by geodesic binning.
///
/// A k-NN graph is built over the points and single-source shortest paths
/// are computed from the node nearest the root. Nodes are split into
/// `bin_count` equal geodesic-distance intervals, clustered by connectivity
/// within each bin, and each cluster becomes a skeleton vertex at its
/// centroid, linked to the cluster containing the geodesic predecessor of
/// its closest node. Disconnected clouds are processed per component (each
/// with the in-component node closest to the root as its source), yielding
/// a forest; callers can detect the situation via `segment_count() > 1`.
///
/// The first and last bins place their vertices at bin centroids, so the
/// skeleton falls short of the stem tips by about half a bin width per end;
/// resolution (and tip coverage) improves with `bin_count`.
pub fn shortest_path_skeleton<T: Real>(
    stem: &LabeledPointCloud<T>,
    params: &SkeletonParams<T>,
) -> Result<Skeleton<T>> {
    params.validate()?;
    let points = stem.positions();
    if points.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: points.len() });
    }

    let graph = NeighborhoodGraph::build_knn(&points, params.knn);
    let root = params.root.unwrap_or_else(|| auto_root(&points));
    let labels = graph.component_labels();
    let component_count = labels.iter().copied().max().map(|m| m as usize + 1).unwrap_or(0);

    let mut vertices: Vec<Vec3<T>> = Vec::new();
    let mut edges: Vec<(u32, u32)> = Vec::new();

    for comp in 0..component_count as u32 {
        let nodes: Vec<u32> =
            (0..points.len() as u32).filter(|&i| labels[i as usize] == comp).collect();
        let source = nearest_node_to(&points, &nodes, root);
        let (dist, pred) = graph.geodesic_from(source);

        let max_dist = nodes
            .iter()
            .map(|&n| dist[n as usize])
            .fold(T::zero(), |a, b| if b.is_finite() && b > a { b } else { a });
        let bins = real_from_usize::<T>(params.bin_count);
        let bin_of = |node: u32| -> usize {
            if max_dist <= T::zero() {
                return 0;
            }
            let raw = (dist[node as usize] / max_dist * bins).floor();
            raw.to_usize().unwrap_or(0).min(params.bin_count - 1)
        };

        // Cluster nodes by connectivity within each bin.
        let mut cluster_of = vec![u32::MAX; points.len()];
        let mut clusters: Vec<Vec<u32>> = Vec::new();
        for &start in &nodes {
            if cluster_of[start as usize] != u32::MAX {
                continue;
            }
            let bin = bin_of(start);
            let id = clusters.len() as u32;
            let mut members = Vec::new();
            let mut stack = vec![start];
            cluster_of[start as usize] = id;
            while let Some(v) = stack.pop() {
                members.push(v);
                for &(w, _) in graph.neighbors(v) {
                    if labels[w as usize] == comp
                        && cluster_of[w as usize] == u32::MAX
                        && bin_of(w) == bin
                    {
                        cluster_of[w as usize] = id;
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            clusters.push(members);
        }

        // One vertex per cluster; each non-source cluster links to the
        // cluster holding the geodesic predecessor of its closest node.
        let base = vertices.len() as u32;
        for members in &clusters {
            let pts: Vec<Vec3<T>> = members.iter().map(|&n| points[n as usize]).collect();
            vertices.push(centroid(&pts));
        }
        for (ci, members) in clusters.iter().enumerate() {
            let min_node = *members
                .iter()
                .min_by(|&&a, &&b| {
                    dist[a as usize]
                        .partial_cmp(&dist[b as usize])
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.cmp(&b))
                })
                .expect("clusters are non-empty");
            if min_node == source {
                continue;
            }
            let parent = pred[min_node as usize];
            if parent == u32::MAX {
                continue;
            }
            let parent_cluster = cluster_of[parent as usize];
            debug_assert_ne!(
                parent_cluster, ci as u32,
                "predecessor of a cluster minimum lies in an earlier bin"
            );
            edges.push((base + parent_cluster, base + ci as u32));
        }
    }

    Skeleton::new(vertices, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::LabeledPoint;
    use crate::geom::Rigid;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn cloud_of(points: Vec<Vec3<f64>>) -> LabeledPointCloud {
        LabeledPointCloud::new(points.into_iter().map(LabeledPoint::unlabeled).collect())
    }

    /// Points on a thin cylinder along +z, dense enough for a connected
    /// k-NN graph.
    fn straight_stem(n: usize, length: f64, radius: f64, seed: u64) -> Vec<Vec3<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let z = (i as f64 + 0.5) / n as f64 * length;
                let phi = rng.random_range(0.0..std::f64::consts::TAU);
                Vec3::new(radius * phi.cos(), radius * phi.sin(), z)
            })
            .collect()
    }

    #[test]
    fn too_few_points() {
        let cloud = cloud_of(vec![Vec3::zero()]);
        assert!(matches!(
            shortest_path_skeleton(&cloud, &SkeletonParams::default()),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn single_bin_collapses_to_global_centroid() {
        let points = straight_stem(400, 50.0, 1.5, 9);
        let expected = centroid(&points);
        let cloud = cloud_of(points);
        let params = SkeletonParams { bin_count: 1, ..SkeletonParams::default() };
        let skel = shortest_path_skeleton(&cloud, &params).unwrap();
        assert_eq!(skel.vertex_count(), 1);
        assert_eq!(skel.edge_count(), 0);
        assert_relative_eq!(skel.vertices()[0].distance(expected), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn straight_stem_length_tracks_bin_resolution() {
        let cloud = cloud_of(straight_stem(4000, 100.0, 1.0, 4));
        // Tip loss is about half a bin width per end: ~L/bins overall.
        let params = SkeletonParams { bin_count: 40, ..SkeletonParams::default() };
        let skel = shortest_path_skeleton(&cloud, &params).unwrap();
        assert_eq!(skel.segment_count(), 1);
        let total = skel.total_length();
        assert!((total - 100.0).abs() / 100.0 < 0.05, "total length {total}");

        let coarse = SkeletonParams { bin_count: 10, ..SkeletonParams::default() };
        let skel10 = shortest_path_skeleton(&cloud, &coarse).unwrap();
        let total10 = skel10.total_length();
        assert!((total10 - 90.0).abs() / 100.0 < 0.06, "bin-10 length {total10}");
    }

    #[test]
    fn output_is_a_forest() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for case in 0..20 {
            let n = rng.random_range(10..300);
            let points: Vec<Vec3<f64>> = (0..n)
                .map(|_| {
                    Vec3::new(
                        rng.random_range(-30.0..30.0),
                        rng.random_range(-30.0..30.0),
                        rng.random_range(-30.0..30.0),
                    )
                })
                .collect();
            let cloud = cloud_of(points);
            let params = SkeletonParams { bin_count: 6, ..SkeletonParams::default() };
            let skel = shortest_path_skeleton(&cloud, &params).unwrap();
            assert_eq!(
                skel.edge_count(),
                skel.vertex_count() - skel.segment_count(),
                "not a forest in case {case}"
            );
        }
    }

    #[test]
    fn disconnected_cloud_yields_one_tree_per_component() {
        let mut points = straight_stem(300, 30.0, 1.0, 5);
        points.extend(
            straight_stem(300, 30.0, 1.0, 6).into_iter().map(|p| p + Vec3::new(500.0, 0.0, 0.0)),
        );
        let cloud = cloud_of(points);
        let params = SkeletonParams { bin_count: 5, ..SkeletonParams::default() };
        let skel = shortest_path_skeleton(&cloud, &params).unwrap();
        assert_eq!(skel.segment_count(), 2);
        assert_eq!(skel.edge_count(), skel.vertex_count() - 2);
    }

    #[test]
    fn rigid_invariance_with_explicit_root() {
        let points = straight_stem(800, 60.0, 1.2, 13);
        let root = Vec3::new(0.0, 0.0, 0.0);
        let params =
            SkeletonParams { bin_count: 12, root: Some(root), ..SkeletonParams::default() };
        let skel = shortest_path_skeleton(&cloud_of(points.clone()), &params).unwrap();

        let t = Rigid::from_axis_angle(Vec3::new(1.0, -0.4, 0.2), 1.1, Vec3::new(30.0, -8.0, 12.0));
        let moved: Vec<Vec3<f64>> = points.iter().map(|&p| t.apply(p)).collect();
        let params_t =
            SkeletonParams { bin_count: 12, root: Some(t.apply(root)), ..SkeletonParams::default() };
        let skel_t = shortest_path_skeleton(&cloud_of(moved), &params_t).unwrap();

        assert_eq!(skel.vertex_count(), skel_t.vertex_count());
        assert_eq!(skel.edges(), skel_t.edges());
        for (a, b) in skel.vertices().iter().zip(skel_t.vertices()) {
            assert!(t.apply(*a).distance(*b) < 1e-9);
        }
    }
}
