//! Ball-pivoting surface reconstruction.
//!
//! A ball of fixed radius rests on three points whenever the ball through
//! them contains no other point; triangles are grown by pivoting the ball
//! around front edges to the first point it touches. The multi-radius
//! variant retries stalled boundary edges with each larger radius, which is
//! what the cleanup pipeline in [`super::zabawa`] builds on.

use std::collections::{HashMap, VecDeque};

use crate::cloud::LabeledPointCloud;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::kdtree::{mean_nearest_neighbor_distance, KdTree};
use crate::mesh::TriangleMesh;
use crate::scalar::{real, Real};

#[derive(Clone, Copy, Debug)]
pub struct BallPivotParams<T = f64> {
    /// Pivot ball radius; `None` derives one from point density.
    pub radius: Option<T>,
    /// Auto radius = `auto_factor` x mean nearest-neighbour distance.
    pub auto_factor: T,
}

impl<T: Real> Default for BallPivotParams<T> {
    fn default() -> Self {
        Self { radius: None, auto_factor: real(2.0) }
    }
}

/// Reconstructs a triangle mesh by pivoting a ball of the given (or
/// density-derived) radius over the leaf points.
pub fn ball_pivoting<T: Real>(
    leaf: &LabeledPointCloud<T>,
    params: &BallPivotParams<T>,
) -> Result<TriangleMesh<T>> {
    let points = leaf.positions();
    if points.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "ball pivoting needs at least 3 points, got {}",
            points.len()
        )));
    }
    let radius = match params.radius {
        Some(r) if r > T::zero() => r,
        Some(_) => return Err(Error::InvalidParams("ball radius must be positive".into())),
        None => params.auto_factor * mean_nearest_neighbor_distance(&points),
    };
    let mesh = ball_pivoting_with_radii(&points, &[radius])?;
    if mesh.is_empty() {
        return Err(Error::RadiusTooSmall { radius: radius.to_f64().unwrap_or(0.0) });
    }
    Ok(mesh)
}

#[derive(Clone, Copy)]
struct FrontInfo<T> {
    /// Third vertex of the triangle this edge borders.
    opposite: u32,
    /// Unit vector from the edge midpoint towards the resting ball centre,
    /// perpendicular to the edge. Radius-independent, so stalled edges can
    /// re-pivot at larger radii.
    u_dir: Vec3<T>,
}

type EdgeKey = (u32, u32);

fn key(a: u32, b: u32) -> EdgeKey {
    (a.min(b), a.max(b))
}

struct Front<T: Real> {
    triangles: Vec<[u32; 3]>,
    edge_count: HashMap<EdgeKey, u8>,
    boundary: HashMap<EdgeKey, FrontInfo<T>>,
    used: Vec<bool>,
}

/// Circumcenter and squared circumradius of a non-degenerate triangle.
fn circumcenter<T: Real>(a: Vec3<T>, b: Vec3<T>, p: Vec3<T>) -> Option<(Vec3<T>, T)> {
    let alpha = (b - p).norm_squared() * (a - b).dot(a - p);
    let beta = (a - p).norm_squared() * (b - a).dot(b - p);
    let gamma = (a - b).norm_squared() * (p - a).dot(p - b);
    let denom = alpha + beta + gamma;
    if denom == T::zero() || !denom.is_finite() {
        return None;
    }
    let cc = (a * alpha + b * beta + p * gamma) / denom;
    Some((cc, (cc - a).norm_squared()))
}

/// Both centres of a radius-`r` ball resting on three points, or `None`
/// when the circumradius exceeds `r` or the triangle is degenerate.
fn ball_centers<T: Real>(a: Vec3<T>, b: Vec3<T>, p: Vec3<T>, r: T) -> Option<[Vec3<T>; 2]> {
    let (cc, r2_circ) = circumcenter(a, b, p)?;
    let h2 = r * r - r2_circ;
    if h2 < T::zero() {
        return None;
    }
    let n = (b - a).cross(p - a).normalized()?;
    let h = h2.sqrt();
    Some([cc + n * h, cc - n * h])
}

/// True when no point other than the excluded three lies strictly inside
/// the ball (a relative tolerance keeps on-sphere points out).
fn ball_is_empty<T: Real>(
    tree: &KdTree<T>,
    center: Vec3<T>,
    r: T,
    exclude: [u32; 3],
) -> bool {
    let strict = r * (T::one() - real(1e-7));
    tree.within_radius(center, strict).iter().all(|&(i, _)| exclude.contains(&(i as u32)))
}

impl<T: Real> Front<T> {
    fn new(n: usize) -> Self {
        Self {
            triangles: Vec::new(),
            edge_count: HashMap::new(),
            boundary: HashMap::new(),
            used: vec![false; n],
        }
    }

    fn count(&self, k: EdgeKey) -> u8 {
        self.edge_count.get(&k).copied().unwrap_or(0)
    }

    fn add_triangle(
        &mut self,
        points: &[Vec3<T>],
        tri: [u32; 3],
        center: Vec3<T>,
        queue: &mut VecDeque<EdgeKey>,
    ) {
        self.triangles.push(tri);
        for v in tri {
            self.used[v as usize] = true;
        }
        for (ea, eb, opposite) in [
            (tri[0], tri[1], tri[2]),
            (tri[1], tri[2], tri[0]),
            (tri[2], tri[0], tri[1]),
        ] {
            let k = key(ea, eb);
            let c = self.count(k) + 1;
            self.edge_count.insert(k, c);
            if c == 1 {
                let m = (points[ea as usize] + points[eb as usize]) / real(2.0);
                let d = points[eb as usize] - points[ea as usize];
                let perp = center - m - d * ((center - m).dot(d) / d.norm_squared());
                if let Some(u_dir) = perp.normalized() {
                    self.boundary.insert(k, FrontInfo { opposite, u_dir });
                    queue.push_back(k);
                }
            } else {
                self.boundary.remove(&k);
            }
        }
    }
}

/// Multi-radius ball pivoting over raw positions. Radii are processed in
/// ascending order; boundary edges that stall at one radius are retried at
/// the next. Returns whatever surface was reachable (possibly empty).
pub fn ball_pivoting_with_radii<T: Real>(points: &[Vec3<T>], radii: &[T]) -> Result<TriangleMesh<T>> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > T::zero())) {
        return Err(Error::InvalidParams("ball radii must be positive".into()));
    }
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let tree = KdTree::build(points);
    let mut front = Front::new(points.len());

    for &radius in &radii {
        // Wake up every boundary edge for this radius.
        let mut queue: VecDeque<EdgeKey> = {
            let mut keys: Vec<EdgeKey> = front.boundary.keys().copied().collect();
            keys.sort_unstable();
            keys.into()
        };
        let mut seed_cursor = 0usize;

        loop {
            while let Some(k) = queue.pop_front() {
                if front.count(k) != 1 {
                    continue;
                }
                let info = match front.boundary.get(&k) {
                    Some(i) => *i,
                    None => continue,
                };
                if let Some((q, center)) = pivot(points, &tree, &front, k, info, radius) {
                    front.add_triangle(points, [k.0, k.1, q], center, &mut queue);
                }
                // A stalled edge stays in `boundary` for the next radius.
            }
            match find_seed(points, &tree, &mut front, radius, &mut seed_cursor) {
                Some((tri, center)) => front.add_triangle(points, tri, center, &mut queue),
                None => break,
            }
        }
    }

    TriangleMesh::new(points.to_vec(), front.triangles)
}

/// Scans for the lexicographically smallest unused triple on which the
/// ball can rest.
fn find_seed<T: Real>(
    points: &[Vec3<T>],
    tree: &KdTree<T>,
    front: &mut Front<T>,
    radius: T,
    cursor: &mut usize,
) -> Option<([u32; 3], Vec3<T>)> {
    let two_r = radius * real(2.0);
    while *cursor < points.len() {
        let i = *cursor;
        if front.used[i] {
            *cursor += 1;
            continue;
        }
        let mut neighbors: Vec<usize> = tree
            .within_radius(points[i], two_r)
            .into_iter()
            .map(|(j, _)| j)
            .filter(|&j| j != i && !front.used[j])
            .collect();
        neighbors.sort_unstable();
        for (jj, &j) in neighbors.iter().enumerate() {
            for &k in &neighbors[jj + 1..] {
                if let Some(centers) =
                    ball_centers(points[i], points[j], points[k], radius)
                {
                    for center in centers {
                        if ball_is_empty(tree, center, radius, [i as u32, j as u32, k as u32]) {
                            return Some(([i as u32, j as u32, k as u32], center));
                        }
                    }
                }
            }
        }
        *cursor += 1;
    }
    None
}

/// Rolls the ball around front edge `k`, returning the first point it
/// touches with an empty ball, together with the new centre.
fn pivot<T: Real>(
    points: &[Vec3<T>],
    tree: &KdTree<T>,
    front: &Front<T>,
    k: EdgeKey,
    info: FrontInfo<T>,
    radius: T,
) -> Option<(u32, Vec3<T>)> {
    let (a_idx, b_idx) = k;
    let a = points[a_idx as usize];
    let b = points[b_idx as usize];
    let m = (a + b) / real(2.0);
    let d = (b - a).normalized()?;
    let half_len_sq = (b - a).norm_squared() / real(4.0);
    let rho_sq = radius * radius - half_len_sq;
    if rho_sq <= T::zero() {
        return None; // Edge too long for this ball.
    }

    // Rolling direction: away from the existing triangle's third vertex.
    let u_hat = info.u_dir;
    let o = points[info.opposite as usize];
    let e = {
        let v = o - m;
        v - d * v.dot(d)
    };
    let side = u_hat.cross(e).dot(d);
    let roll = if side > T::zero() { -T::one() } else { T::one() };

    let eps = real::<T>(1e-9);
    let two_pi = real::<T>(std::f64::consts::TAU);
    // Contacts on the same side of the sheet arrive within half a turn;
    // anything past pi is the ball wrapping around an open boundary onto
    // the underside, which would double-cover thin surfaces.
    let max_angle = real::<T>(std::f64::consts::PI) + eps;
    let mut candidates: Vec<(T, u32, Vec3<T>)> = Vec::new();
    for (qi, _) in tree.within_radius(m, radius * real(2.0)) {
        let q = qi as u32;
        if q == a_idx || q == b_idx || q == info.opposite {
            continue;
        }
        // A third triangle on any edge would make the surface non-manifold.
        if front.count(key(a_idx, q)) >= 2 || front.count(key(b_idx, q)) >= 2 {
            continue;
        }
        let Some(centers) = ball_centers(a, b, points[qi], radius) else {
            continue;
        };
        for center in centers {
            let v = {
                let w = center - m;
                w - d * w.dot(d)
            };
            let Some(v_hat) = v.normalized() else { continue };
            let phi = (u_hat.cross(v_hat).dot(d)).atan2(u_hat.dot(v_hat));
            let mut theta = roll * phi;
            if theta <= eps {
                theta += two_pi;
            }
            if theta <= max_angle {
                candidates.push((theta, q, center));
            }
        }
    }
    candidates.sort_by(|x, y| {
        x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal).then(x.1.cmp(&y.1))
    });
    for (_, q, center) in candidates {
        if ball_is_empty(tree, center, radius, [a_idx, b_idx, q]) {
            return Some((q, center));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::LabeledPoint;
    use crate::geom::Rigid;

    fn cloud_of(points: Vec<Vec3<f64>>) -> LabeledPointCloud {
        LabeledPointCloud::new(points.into_iter().map(LabeledPoint::unlabeled).collect())
    }

    fn grid(nx: usize, ny: usize, spacing: f64) -> Vec<Vec3<f64>> {
        let mut points = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                points.push(Vec3::new(i as f64 * spacing, j as f64 * spacing, 0.0));
            }
        }
        points
    }

    #[test]
    fn three_points_make_one_triangle() {
        let cloud = cloud_of(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(1.0, 1.5, 0.0),
        ]);
        let mesh = ball_pivoting(&cloud, &BallPivotParams { radius: Some(5.0), ..Default::default() })
            .unwrap();
        assert_eq!(mesh.triangle_count(), 1);
    }

    #[test]
    fn radius_below_circumradius_fails() {
        let cloud = cloud_of(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(1.0, 1.5, 0.0),
        ]);
        let err = ball_pivoting(&cloud, &BallPivotParams { radius: Some(0.3), ..Default::default() })
            .unwrap_err();
        assert!(matches!(err, Error::RadiusTooSmall { .. }));
    }

    #[test]
    fn too_few_points() {
        let cloud = cloud_of(vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)]);
        assert!(matches!(
            ball_pivoting(&cloud, &BallPivotParams::default()),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn planar_grid_recovers_hull_area() {
        // 10 mm x 10 mm grid at 1 mm spacing; radius 2x spacing. In-plane
        // ball pivoting reduces to an empty-circumcircle triangulation, so
        // the mesh should tile the hull.
        let t = Rigid::from_axis_angle(Vec3::new(1.0, 0.3, 0.2), 0.7, Vec3::new(4.0, 5.0, -6.0));
        let points: Vec<Vec3<f64>> = grid(11, 11, 1.0).into_iter().map(|p| t.apply(p)).collect();
        let cloud = cloud_of(points);
        let mesh = ball_pivoting(&cloud, &BallPivotParams { radius: Some(2.0), ..Default::default() })
            .unwrap();
        let area = mesh.area();
        assert!((area - 100.0).abs() / 100.0 < 0.02, "grid area {area}");
    }

    #[test]
    fn auto_radius_covers_uniform_grid() {
        let cloud = cloud_of(grid(11, 11, 0.8));
        let mesh = ball_pivoting(&cloud, &BallPivotParams::default()).unwrap();
        let expected = 64.0; // (10 * 0.8)^2
        let area = mesh.area();
        assert!((area - expected).abs() / expected < 0.02, "grid area {area}");
    }

    #[test]
    fn no_output_triangle_hides_a_point_inside_its_ball() {
        // Brute-force check of the resting-ball property on a small noisy
        // patch: for every triangle some ball through its vertices is
        // empty.
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut points = grid(8, 8, 1.0);
        for p in &mut points {
            p.z += rng.random_range(-0.08..0.08);
        }
        let radius = 2.0;
        let cloud = cloud_of(points.clone());
        let mesh = ball_pivoting(&cloud, &BallPivotParams { radius: Some(radius), ..Default::default() })
            .unwrap();
        assert!(mesh.triangle_count() > 50);
        for tri in mesh.triangles() {
            let [i, j, k] = *tri;
            let centers = ball_centers(
                points[i as usize],
                points[j as usize],
                points[k as usize],
                radius,
            )
            .expect("output triangles fit the ball");
            let empty = centers.iter().any(|&c| {
                points.iter().enumerate().all(|(n, p)| {
                    tri.contains(&(n as u32)) || p.distance(c) >= radius * (1.0 - 1e-7)
                })
            });
            assert!(empty, "triangle {tri:?} has no empty resting ball");
        }
    }

    #[test]
    fn multi_radius_bridges_density_jumps() {
        // A fine patch and a coarse patch: the small radius meshes the fine
        // part, the larger radius must bridge and mesh the coarse part.
        let mut points = grid(6, 6, 0.5);
        points.extend(grid(4, 6, 1.5).into_iter().map(|p| p + Vec3::new(3.5, 0.0, 0.0)));
        let fine_only = ball_pivoting_with_radii(&points, &[1.0]).unwrap();
        let both = ball_pivoting_with_radii(&points, &[1.0, 3.0]).unwrap();
        assert!(both.triangle_count() > fine_only.triangle_count());
        assert!(both.area() > fine_only.area() + 1.0);
    }

    #[test]
    fn deterministic_output() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut points = grid(9, 9, 1.0);
        for p in &mut points {
            p.z += rng.random_range(-0.1..0.1);
        }
        let a = ball_pivoting_with_radii(&points, &[2.0]).unwrap();
        let b = ball_pivoting_with_radii(&points, &[2.0]).unwrap();
        assert_eq!(a.triangles(), b.triangles());
    }
}
