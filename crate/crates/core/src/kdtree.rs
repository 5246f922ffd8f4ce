//! Static 3D kd-tree for nearest-neighbour and radius queries.

use crate::geom::Vec3;
use crate::scalar::Real;

struct Node {
    /// Index into the original point slice.
    point: u32,
    axis: u8,
    left: u32,
    right: u32,
}

const NIL: u32 = u32::MAX;

/// Median-split kd-tree over a borrowed point set. Query results are sorted
/// by `(distance, index)` so downstream consumers stay deterministic.
pub struct KdTree<'a, T: Real> {
    points: &'a [Vec3<T>],
    nodes: Vec<Node>,
    root: u32,
}

impl<'a, T: Real> KdTree<'a, T> {
    pub fn build(points: &'a [Vec3<T>]) -> Self {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::with_capacity(points.len());
        let root = Self::build_rec(points, &mut order, 0, &mut nodes);
        Self { points, nodes, root }
    }

    fn build_rec(points: &[Vec3<T>], idx: &mut [u32], depth: usize, nodes: &mut Vec<Node>) -> u32 {
        if idx.is_empty() {
            return NIL;
        }
        let axis = (depth % 3) as u8;
        let mid = idx.len() / 2;
        idx.select_nth_unstable_by(mid, |&a, &b| {
            let (pa, pb) = (points[a as usize], points[b as usize]);
            let (ka, kb) = match axis {
                0 => (pa.x, pb.x),
                1 => (pa.y, pb.y),
                _ => (pa.z, pb.z),
            };
            ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
        });
        let point = idx[mid];
        let slot = nodes.len() as u32;
        nodes.push(Node { point, axis, left: NIL, right: NIL });
        let (lo, hi) = idx.split_at_mut(mid);
        let left = Self::build_rec(points, lo, depth + 1, nodes);
        let right = Self::build_rec(points, &mut hi[1..], depth + 1, nodes);
        nodes[slot as usize].left = left;
        nodes[slot as usize].right = right;
        slot
    }

    fn coord(p: Vec3<T>, axis: u8) -> T {
        match axis {
            0 => p.x,
            1 => p.y,
            _ => p.z,
        }
    }

    /// The `k` nearest points to `query` (possibly including a point equal to
    /// the query itself), as `(index, distance)` sorted ascending.
    pub fn nearest(&self, query: Vec3<T>, k: usize) -> Vec<(usize, T)> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        // Max-heap of the best k so far, keyed on (distance, index).
        let mut heap: Vec<(T, u32)> = Vec::with_capacity(k + 1);
        self.nearest_rec(self.root, query, k, &mut heap);
        heap.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        heap.into_iter().map(|(d, i)| (i as usize, d.sqrt())).collect()
    }

    fn nearest_rec(&self, node: u32, query: Vec3<T>, k: usize, heap: &mut Vec<(T, u32)>) {
        if node == NIL {
            return;
        }
        let n = &self.nodes[node as usize];
        let p = self.points[n.point as usize];
        let d2 = p.distance_squared(query);
        if heap.len() < k {
            heap.push((d2, n.point));
            heap.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(b.1.cmp(&a.1)));
        } else if d2 < heap[0].0 || (d2 == heap[0].0 && n.point < heap[0].1) {
            heap[0] = (d2, n.point);
            heap.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(b.1.cmp(&a.1)));
        }
        let delta = Self::coord(query, n.axis) - Self::coord(p, n.axis);
        let (near, far) = if delta <= T::zero() { (n.left, n.right) } else { (n.right, n.left) };
        self.nearest_rec(near, query, k, heap);
        if heap.len() < k || delta * delta <= heap[0].0 {
            self.nearest_rec(far, query, k, heap);
        }
    }

    /// All points within `radius` of `query`, as `(index, distance)` sorted
    /// ascending.
    pub fn within_radius(&self, query: Vec3<T>, radius: T) -> Vec<(usize, T)> {
        let mut out = Vec::new();
        self.radius_rec(self.root, query, radius * radius, &mut out);
        out.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        out
    }

    fn radius_rec(&self, node: u32, query: Vec3<T>, r2: T, out: &mut Vec<(usize, T)>) {
        if node == NIL {
            return;
        }
        let n = &self.nodes[node as usize];
        let p = self.points[n.point as usize];
        let d2 = p.distance_squared(query);
        if d2 <= r2 {
            out.push((n.point as usize, d2.sqrt()));
        }
        let delta = Self::coord(query, n.axis) - Self::coord(p, n.axis);
        let (near, far) = if delta <= T::zero() { (n.left, n.right) } else { (n.right, n.left) };
        self.radius_rec(near, query, r2, out);
        if delta * delta <= r2 {
            self.radius_rec(far, query, r2, out);
        }
    }
}

/// Mean distance to the nearest other point. Errors are not possible; a
/// single-point or empty cloud yields zero.
pub fn mean_nearest_neighbor_distance<T: Real>(points: &[Vec3<T>]) -> T {
    if points.len() < 2 {
        return T::zero();
    }
    let tree = KdTree::build(points);
    let mut sum = T::zero();
    for (i, &p) in points.iter().enumerate() {
        // k=2 so the point itself (distance 0) can be skipped.
        let nn = tree.nearest(p, 2);
        if let Some(&(_, d)) = nn.iter().find(|&&(j, _)| j != i) {
            sum += d;
        }
    }
    sum / crate::scalar::real_from_usize(points.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Vec3<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Vec3::new(
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                )
            })
            .collect()
    }

    fn brute_nearest(points: &[Vec3<f64>], q: Vec3<f64>, k: usize) -> Vec<(usize, f64)> {
        let mut all: Vec<(usize, f64)> =
            points.iter().enumerate().map(|(i, p)| (i, p.distance(q))).collect();
        all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }

    #[test]
    fn matches_brute_force_knn() {
        let points = random_points(300, 11);
        let tree = KdTree::build(&points);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let q = Vec3::new(
                rng.random_range(-12.0..12.0),
                rng.random_range(-12.0..12.0),
                rng.random_range(-12.0..12.0),
            );
            let got = tree.nearest(q, 7);
            let want = brute_nearest(&points, q, 7);
            for (g, w) in got.iter().zip(&want) {
                assert_eq!(g.0, w.0);
                assert_relative_eq!(g.1, w.1, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn matches_brute_force_radius() {
        let points = random_points(200, 3);
        let tree = KdTree::build(&points);
        let q = Vec3::new(0.5, -0.5, 0.25);
        let got: Vec<usize> = tree.within_radius(q, 5.0).into_iter().map(|(i, _)| i).collect();
        let mut want: Vec<usize> = points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.distance(q) <= 5.0)
            .map(|(i, _)| i)
            .collect();
        want.sort_by(|&a, &b| {
            points[a].distance(q).partial_cmp(&points[b].distance(q)).unwrap().then(a.cmp(&b))
        });
        assert_eq!(got, want);
    }

    #[test]
    fn mean_nn_distance_on_unit_grid() {
        let mut points = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                points.push(Vec3::new(i as f64, j as f64, 0.0));
            }
        }
        assert_relative_eq!(mean_nearest_neighbor_distance(&points), 1.0, epsilon = 1e-12);
    }
}
