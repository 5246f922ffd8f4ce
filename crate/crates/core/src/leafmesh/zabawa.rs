//! Leaf-area pipeline: statistical outlier removal, uniform sub-sampling,
//! three ball-pivoting passes with density-scaled radii, and hole closing.

use std::collections::{BTreeMap, HashMap};

use crate::cloud::LabeledPointCloud;
use crate::error::{Error, Result};
use crate::geom::{centroid, covariance3, symmetric_eigen3, Vec3};
use crate::kdtree::{mean_nearest_neighbor_distance, KdTree};
use crate::mesh::TriangleMesh;
use crate::scalar::{real, real_from_usize, Real};

use super::bpa::ball_pivoting_with_radii;

#[derive(Clone, Debug)]
pub struct ZabawaParams<T = f64> {
    /// Neighbour count for the k-NN mean distance used in outlier removal.
    pub outlier_k: usize,
    /// Points whose k-NN mean distance exceeds mean + `outlier_sigma` x std
    /// are dropped.
    pub outlier_sigma: T,
    /// Relative floor on the outlier threshold (`mean x this`); keeps the
    /// corners of clean, noise-free patches from reading as outliers when
    /// the spread is tiny.
    pub outlier_min_ratio: T,
    /// Ball radii as multiples of the post-subsample mean point distance.
    pub radius_factors: Vec<T>,
    /// Boundary loops with at most this many edges are closed.
    pub hole_max_edges: usize,
}

impl<T: Real> Default for ZabawaParams<T> {
    fn default() -> Self {
        Self {
            outlier_k: 16,
            outlier_sigma: real(2.0),
            outlier_min_ratio: real(1.5),
            radius_factors: vec![T::one(), real(2.0), real(4.0)],
            hole_max_edges: 30,
        }
    }
}

/// Drops points whose mean distance to their `k` nearest neighbours is an
/// outlier (beyond mean + sigma x std over all points).
fn remove_outliers<T: Real>(points: &[Vec3<T>], k: usize, sigma: T, min_ratio: T) -> Vec<Vec3<T>> {
    if points.len() <= k + 1 {
        return points.to_vec();
    }
    let tree = KdTree::build(points);
    let mut scores = Vec::with_capacity(points.len());
    for (i, &p) in points.iter().enumerate() {
        let nn = tree.nearest(p, k + 1);
        let mut sum = T::zero();
        let mut cnt = 0usize;
        for (j, d) in nn {
            if j != i {
                sum += d;
                cnt += 1;
            }
        }
        scores.push(sum / real_from_usize(cnt.max(1)));
    }
    let n = real_from_usize::<T>(scores.len());
    let mean = scores.iter().fold(T::zero(), |a, &b| a + b) / n;
    let var = scores.iter().fold(T::zero(), |a, &b| a + (b - mean) * (b - mean)) / n;
    let threshold = (mean + sigma * var.sqrt()).max(mean * min_ratio);
    points
        .iter()
        .zip(&scores)
        .filter(|(_, &s)| s <= threshold)
        .map(|(p, _)| *p)
        .collect()
}

/// Uniform sub-sampling: one point (the centroid of the members) per voxel
/// of the given size.
fn voxel_subsample<T: Real>(points: &[Vec3<T>], voxel: T) -> Vec<Vec3<T>> {
    if !(voxel > T::zero()) {
        return points.to_vec();
    }
    let mut origin = points[0];
    for p in points {
        origin = origin.min_components(*p);
    }
    // Half-voxel shift: lattice-aligned inputs land at voxel centres, not
    // on boundaries where floating floor() aliases.
    origin = origin - Vec3::new(voxel, voxel, voxel) / real(2.0);
    let mut cells: BTreeMap<(i64, i64, i64), (Vec3<T>, usize)> = BTreeMap::new();
    for &p in points {
        let rel = (p - origin) / voxel;
        let idx = (
            rel.x.floor().to_i64().unwrap_or(0),
            rel.y.floor().to_i64().unwrap_or(0),
            rel.z.floor().to_i64().unwrap_or(0),
        );
        let cell = cells.entry(idx).or_insert((Vec3::zero(), 0));
        cell.0 += p;
        cell.1 += 1;
    }
    cells.into_values().map(|(sum, n)| sum / real_from_usize(n)).collect()
}

/// Boundary loops of a mesh (edges used by exactly one triangle), traced
/// deterministically.
fn boundary_loops<T: Real>(mesh: &TriangleMesh<T>) -> Vec<Vec<u32>> {
    let mut edge_count: HashMap<(u32, u32), u8> = HashMap::new();
    for t in mesh.triangles() {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut adjacency: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (&(a, b), &c) in &edge_count {
        if c == 1 {
            adjacency.entry(a).or_default().push(b);
            adjacency.entry(b).or_default().push(a);
        }
    }
    for n in adjacency.values_mut() {
        n.sort_unstable();
    }

    let mut visited: std::collections::BTreeSet<u32> = std::collections::BTreeSet::new();
    let mut loops = Vec::new();
    let starts: Vec<u32> = adjacency.keys().copied().collect();
    for start in starts {
        if visited.contains(&start) || adjacency[&start].len() != 2 {
            continue;
        }
        let mut path = vec![start];
        visited.insert(start);
        let mut prev = start;
        let mut cur = adjacency[&start][0];
        let mut closed = false;
        while !visited.contains(&cur) {
            visited.insert(cur);
            path.push(cur);
            let nbrs = match adjacency.get(&cur) {
                Some(n) if n.len() == 2 => n,
                _ => break, // non-manifold boundary vertex; drop this chain
            };
            let next = if nbrs[0] == prev { nbrs[1] } else { nbrs[0] };
            prev = cur;
            cur = next;
            if cur == start {
                closed = true;
                break;
            }
        }
        if closed && path.len() >= 3 {
            loops.push(path);
        }
    }
    loops
}

/// Fills a boundary loop by ear clipping in its best-fit plane. Returns
/// the added triangles, or nothing when the polygon is too degenerate.
fn ear_clip_loop<T: Real>(vertices: &[Vec3<T>], ring: &[u32]) -> Vec<[u32; 3]> {
    let pts: Vec<Vec3<T>> = ring.iter().map(|&i| vertices[i as usize]).collect();
    let center = centroid(&pts);
    let (values, vectors) = symmetric_eigen3(covariance3(&pts));
    if !(values[1] > T::zero()) {
        return Vec::new();
    }
    let (ax_u, ax_v) = (vectors[0], vectors[1]);
    let mut poly: Vec<(T, T)> =
        pts.iter().map(|&p| ((p - center).dot(ax_u), (p - center).dot(ax_v))).collect();

    // Orient counter-clockwise.
    let mut signed = T::zero();
    for i in 0..poly.len() {
        let (x0, y0) = poly[i];
        let (x1, y1) = poly[(i + 1) % poly.len()];
        signed += x0 * y1 - x1 * y0;
    }
    let mut order: Vec<usize> = (0..ring.len()).collect();
    if signed < T::zero() {
        order.reverse();
        poly.reverse();
    }

    let cross = |a: (T, T), b: (T, T), c: (T, T)| {
        (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
    };
    let inside = |a: (T, T), b: (T, T), c: (T, T), p: (T, T)| {
        cross(a, b, p) > T::zero() && cross(b, c, p) > T::zero() && cross(c, a, p) > T::zero()
    };

    let mut triangles = Vec::new();
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let mut guard = 0usize;
    while idx.len() > 3 && guard < 10_000 {
        guard += 1;
        let mut clipped = false;
        for i in 0..idx.len() {
            let prev = idx[(i + idx.len() - 1) % idx.len()];
            let cur = idx[i];
            let next = idx[(i + 1) % idx.len()];
            if cross(poly[prev], poly[cur], poly[next]) <= T::zero() {
                continue; // reflex
            }
            let blocked = idx.iter().any(|&j| {
                j != prev && j != cur && j != next && inside(poly[prev], poly[cur], poly[next], poly[j])
            });
            if blocked {
                continue;
            }
            triangles.push([ring[order[prev]], ring[order[cur]], ring[order[next]]]);
            idx.remove(i);
            clipped = true;
            break;
        }
        if !clipped {
            return Vec::new(); // numerically stuck; leave the hole open
        }
    }
    if idx.len() == 3 {
        triangles.push([ring[order[idx[0]]], ring[order[idx[1]]], ring[order[idx[2]]]]);
    }
    triangles
}

/// Meshes a leaf with the cleanup pipeline: outlier removal, uniform
/// sub-sampling at the mean point distance, ball pivoting with radii scaled
/// from the resampled density, and closing of small boundary loops.
pub fn zabawa_mesh<T: Real>(
    leaf: &LabeledPointCloud<T>,
    params: &ZabawaParams<T>,
) -> Result<TriangleMesh<T>> {
    if leaf.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "meshing needs at least 3 points, got {}",
            leaf.len()
        )));
    }
    let cleaned = remove_outliers(
        &leaf.positions(),
        params.outlier_k,
        params.outlier_sigma,
        params.outlier_min_ratio,
    );
    if cleaned.len() < 3 {
        return Err(Error::DegenerateGeometry("outlier removal left fewer than 3 points".into()));
    }

    let spacing = mean_nearest_neighbor_distance(&cleaned);
    let resampled = voxel_subsample(&cleaned, spacing);
    if resampled.len() < 3 {
        return Err(Error::DegenerateGeometry("sub-sampling left fewer than 3 points".into()));
    }

    let spacing = mean_nearest_neighbor_distance(&resampled);
    if !(spacing > T::zero()) {
        return Err(Error::DegenerateGeometry("points are coincident".into()));
    }
    let radii: Vec<T> = params.radius_factors.iter().map(|&f| f * spacing).collect();
    let mesh = ball_pivoting_with_radii(&resampled, &radii)?;
    if mesh.is_empty() {
        return Err(Error::RadiusTooSmall {
            radius: radii.last().and_then(|r| r.to_f64()).unwrap_or(0.0),
        });
    }

    let mut triangles = mesh.triangles().to_vec();
    for ring in boundary_loops(&mesh) {
        if ring.len() <= params.hole_max_edges {
            triangles.extend(ear_clip_loop(mesh.vertices(), &ring));
        }
    }
    TriangleMesh::new(mesh.vertices().to_vec(), triangles)
}
