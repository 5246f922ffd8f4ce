//! Incremental 2D Delaunay triangulation and the 2.5D leaf meshing built
//! on it.

use crate::cloud::LabeledPointCloud;
use crate::error::Result;
use crate::mesh::TriangleMesh;
use crate::scalar::{real, Real};

use super::frame::leaf_axis_frame;

const NIL: u32 = u32::MAX;

struct Tri {
    /// CCW vertex indices.
    v: [u32; 3],
    /// `nbr[k]` lies across the edge opposite `v[k]`.
    nbr: [u32; 3],
    alive: bool,
}

fn orient2d<T: Real>(a: (T, T), b: (T, T), c: (T, T)) -> T {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Positive when `p` lies strictly inside the circumcircle of CCW `abc`.
fn in_circle<T: Real>(a: (T, T), b: (T, T), c: (T, T), p: (T, T)) -> T {
    let (ax, ay) = (a.0 - p.0, a.1 - p.1);
    let (bx, by) = (b.0 - p.0, b.1 - p.1);
    let (cx, cy) = (c.0 - p.0, c.1 - p.1);
    let a2 = ax * ax + ay * ay;
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx)
}

fn morton_key(x: u32, y: u32) -> u64 {
    fn spread(mut v: u64) -> u64 {
        v &= 0xffff_ffff;
        v = (v | (v << 16)) & 0x0000_ffff_0000_ffff;
        v = (v | (v << 8)) & 0x00ff_00ff_00ff_00ff;
        v = (v | (v << 4)) & 0x0f0f_0f0f_0f0f_0f0f;
        v = (v | (v << 2)) & 0x3333_3333_3333_3333;
        v = (v | (v << 1)) & 0x5555_5555_5555_5555;
        v
    }
    spread(x as u64) | (spread(y as u64) << 1)
}

/// Delaunay triangulation of a 2D point set; returns CCW triangles as
/// indices into `points`. Degenerate inputs (fewer than 3 points, all
/// collinear) yield no triangles. Exact duplicates must be removed or
/// perturbed by the caller.
pub fn delaunay_triangulation<T: Real>(points: &[(T, T)]) -> Vec<[u32; 3]> {
    let n = points.len();
    if n < 3 {
        return Vec::new();
    }

    let (mut min_x, mut min_y) = points[0];
    let (mut max_x, mut max_y) = points[0];
    for &(x, y) in points {
        min_x = min_x.min(x);
        min_y = min_y.min(y);
        max_x = max_x.max(x);
        max_y = max_y.max(y);
    }
    let span = (max_x - min_x).max(max_y - min_y).max(T::one());
    let cx = (min_x + max_x) / real(2.0);
    let cy = (min_y + max_y) / real(2.0);
    let m = span * real(64.0);

    // Working coordinates, with the super-triangle at the end.
    let mut coords: Vec<(T, T)> = points.to_vec();
    coords.push((cx - m, cy - m));
    coords.push((cx + m, cy - m));
    coords.push((cx, cy + m));
    let sup = [n as u32, n as u32 + 1, n as u32 + 2];

    let mut tris: Vec<Tri> = vec![Tri { v: sup, nbr: [NIL; 3], alive: true }];

    // Morton insertion order keeps the walk short on structured inputs.
    let mut order: Vec<u32> = (0..n as u32).collect();
    let scale = real::<T>(65535.0);
    let key = |i: u32| {
        let (x, y) = points[i as usize];
        let qx = ((x - min_x) / span * scale).to_u32().unwrap_or(0);
        let qy = ((y - min_y) / span * scale).to_u32().unwrap_or(0);
        morton_key(qx, qy)
    };
    order.sort_by_key(|&i| (key(i), i));

    let mut last = 0u32;
    let mut cavity: Vec<u32> = Vec::new();
    let mut in_cavity: Vec<bool> = Vec::new();
    let mut fan: std::collections::HashMap<(u32, u32), u32> = std::collections::HashMap::new();

    for &pi in &order {
        let p = coords[pi as usize];

        // Walk towards the triangle containing p.
        let mut cur = if tris[last as usize].alive { last } else { 0 };
        if !tris[cur as usize].alive {
            cur = (0..tris.len() as u32).find(|&t| tris[t as usize].alive).expect("alive triangle");
        }
        let mut steps = 0usize;
        let located = 'walk: loop {
            steps += 1;
            if steps > 4 * tris.len() + 16 {
                // Numerical corner; scan for any containing triangle.
                break (0..tris.len() as u32)
                    .find(|&t| {
                        let tri = &tris[t as usize];
                        tri.alive
                            && (0..3).all(|k| {
                                let a = coords[tri.v[(k + 1) % 3] as usize];
                                let b = coords[tri.v[(k + 2) % 3] as usize];
                                orient2d(a, b, p) >= T::zero()
                            })
                    })
                    .expect("point lies inside the super-triangle");
            }
            let tri = &tris[cur as usize];
            for k in 0..3 {
                let a = coords[tri.v[(k + 1) % 3] as usize];
                let b = coords[tri.v[(k + 2) % 3] as usize];
                if orient2d(a, b, p) < T::zero() {
                    debug_assert_ne!(tri.nbr[k], NIL, "walk escaped the super-triangle");
                    cur = tri.nbr[k];
                    continue 'walk;
                }
            }
            break cur;
        };

        // Grow the cavity of triangles whose circumcircle contains p.
        cavity.clear();
        in_cavity.resize(tris.len(), false);
        in_cavity.fill(false);
        cavity.push(located);
        in_cavity[located as usize] = true;
        let mut head = 0;
        while head < cavity.len() {
            let t = cavity[head];
            head += 1;
            for k in 0..3 {
                let nb = tris[t as usize].nbr[k];
                if nb == NIL || in_cavity[nb as usize] {
                    continue;
                }
                let tv = tris[nb as usize].v;
                if in_circle(
                    coords[tv[0] as usize],
                    coords[tv[1] as usize],
                    coords[tv[2] as usize],
                    p,
                ) > T::zero()
                {
                    in_cavity[nb as usize] = true;
                    cavity.push(nb);
                }
            }
        }

        // Refill the cavity with a fan around p.
        fan.clear();
        let mut new_first = tris.len() as u32;
        for &t in &cavity {
            for k in 0..3 {
                let nb = tris[t as usize].nbr[k];
                if nb != NIL && in_cavity[nb as usize] {
                    continue;
                }
                let a = tris[t as usize].v[(k + 1) % 3];
                let b = tris[t as usize].v[(k + 2) % 3];
                let nt = tris.len() as u32;
                tris.push(Tri { v: [pi, a, b], nbr: [nb, NIL, NIL], alive: true });
                // Fix the outside neighbour's back-pointer.
                if nb != NIL {
                    let back = &mut tris[nb as usize];
                    for slot in 0..3 {
                        if back.nbr[slot] == t {
                            back.nbr[slot] = nt;
                        }
                    }
                }
                fan.insert((pi, a), nt);
                fan.insert((b, pi), nt);
            }
        }
        // Stitch fan triangles to each other around p: the neighbour
        // across edge (b, p) carries the directed entry (p, b), and the one
        // across (p, a) carries (a, p).
        let new_last = tris.len() as u32;
        for t in new_first..new_last {
            let [_, a, b] = tris[t as usize].v;
            if let Some(&other) = fan.get(&(pi, b)) {
                tris[t as usize].nbr[1] = other;
            }
            if let Some(&other) = fan.get(&(a, pi)) {
                tris[t as usize].nbr[2] = other;
            }
        }
        for &t in &cavity {
            tris[t as usize].alive = false;
        }
        if new_first < new_last {
            last = new_first;
        }
        new_first = new_last;
        let _ = new_first;
    }

    tris.iter()
        .filter(|t| t.alive && t.v.iter().all(|&v| v < n as u32))
        .map(|t| t.v)
        .collect()
}

/// Triangulates a leaf by projecting it into its dominant plane, running a
/// 2D Delaunay triangulation there, and lifting the connectivity back to
/// the original 3D points.
///
/// Every projected point receives a sub-nanometre index-keyed offset
/// (1e-9 of the bounding-box diagonal) so lattice degeneracies — duplicate
/// projections, cocircular quadruples, on-edge insertions — break
/// deterministically without measurable area effect.
pub fn delaunay_25d<T: Real>(leaf: &LabeledPointCloud<T>) -> Result<TriangleMesh<T>> {
    let frame = leaf_axis_frame(leaf)?;
    let positions = leaf.positions();
    let mut projected: Vec<(T, T)> = positions.iter().map(|&p| frame.project(p)).collect();

    let (mut min_x, mut min_y) = projected[0];
    let (mut max_x, mut max_y) = projected[0];
    for &(x, y) in &projected {
        min_x = min_x.min(x);
        min_y = min_y.min(y);
        max_x = max_x.max(x);
        max_y = max_y.max(y);
    }
    let diag = ((max_x - min_x) * (max_x - min_x) + (max_y - min_y) * (max_y - min_y)).sqrt();
    let jitter = diag.max(T::one()) * real(1e-9);
    let golden = real::<T>(2.399963229728653);
    for (i, (x, y)) in projected.iter_mut().enumerate() {
        let theta = crate::scalar::real_from_usize::<T>(i) * golden;
        *x += jitter * theta.cos();
        *y += jitter * theta.sin();
    }

    let triangles = delaunay_triangulation(&projected);
    TriangleMesh::new(positions, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::{LabeledPoint, LabeledPointCloud};
    use crate::geom::{Rigid, Vec3};
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn cloud_of(points: Vec<Vec3<f64>>) -> LabeledPointCloud {
        LabeledPointCloud::new(points.into_iter().map(LabeledPoint::unlabeled).collect())
    }

    #[test]
    fn triangle_of_three_points() {
        let tris = delaunay_triangulation(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        assert_eq!(tris.len(), 1);
    }

    #[test]
    fn unit_square_gives_two_triangles_of_total_area_one() {
        let cloud = cloud_of(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ]);
        let mesh = delaunay_25d(&cloud).unwrap();
        assert_eq!(mesh.triangle_count(), 2);
        assert_relative_eq!(mesh.area(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn flat_grid_covers_its_hull() {
        // 10 mm x 10 mm at 1 mm spacing, arbitrarily rotated in space.
        let t = Rigid::from_axis_angle(Vec3::new(0.4, 1.0, -0.7), 0.8, Vec3::new(3.0, -2.0, 5.0));
        let mut points = Vec::new();
        for i in 0..=10 {
            for j in 0..=10 {
                points.push(t.apply(Vec3::new(i as f64, j as f64, 0.0)));
            }
        }
        let mesh = delaunay_25d(&cloud_of(points)).unwrap();
        assert_relative_eq!(mesh.area(), 100.0, epsilon = 1e-6);
    }

    #[test]
    fn collinear_input_is_degenerate() {
        let points: Vec<Vec3<f64>> = (0..20).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        assert!(delaunay_25d(&cloud_of(points)).is_err());
    }

    #[test]
    fn delaunay_property_against_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _case in 0..5 {
            let points: Vec<(f64, f64)> = (0..120)
                .map(|_| (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)))
                .collect();
            let tris = delaunay_triangulation(&points);
            assert!(!tris.is_empty());
            for t in &tris {
                let (a, b, c) = (
                    points[t[0] as usize],
                    points[t[1] as usize],
                    points[t[2] as usize],
                );
                for (i, &p) in points.iter().enumerate() {
                    if t.contains(&(i as u32)) {
                        continue;
                    }
                    // Normalise by the triangle's doubled area to get a
                    // scale-free margin.
                    let area2 = orient2d(a, b, c).abs();
                    assert!(
                        in_circle(a, b, c, p) <= 1e-7 * area2.max(1e-12),
                        "point {i} strictly inside circumcircle of {t:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn triangulation_area_matches_hull_area() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let points: Vec<(f64, f64)> = (0..200)
            .map(|_| (rng.random_range(-7.0..7.0), rng.random_range(-4.0..4.0)))
            .collect();
        let tris = delaunay_triangulation(&points);
        let tri_area: f64 = tris
            .iter()
            .map(|t| {
                orient2d(
                    points[t[0] as usize],
                    points[t[1] as usize],
                    points[t[2] as usize],
                )
                .abs()
                    / 2.0
            })
            .sum();

        // Convex hull area by monotone chain + shoelace.
        let mut sorted = points.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut hull: Vec<(f64, f64)> = Vec::new();
        for pass in 0..2 {
            let start = hull.len();
            let iter: Box<dyn Iterator<Item = &(f64, f64)>> =
                if pass == 0 { Box::new(sorted.iter()) } else { Box::new(sorted.iter().rev()) };
            for p in iter {
                while hull.len() >= start + 2
                    && orient2d(hull[hull.len() - 2], hull[hull.len() - 1], *p) <= 0.0
                {
                    hull.pop();
                }
                hull.push(*p);
            }
            hull.pop();
        }
        let mut hull_area = 0.0;
        for i in 0..hull.len() {
            let (x0, y0) = hull[i];
            let (x1, y1) = hull[(i + 1) % hull.len()];
            hull_area += x0 * y1 - x1 * y0;
        }
        hull_area = hull_area.abs() / 2.0;
        assert_relative_eq!(tri_area, hull_area, epsilon = 1e-9 * hull_area);
    }

    #[test]
    fn duplicate_projections_are_handled() {
        // Two points projecting to the same 2D location (stacked in z).
        let mut points = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(5.0, 0.0, 0.1),
            Vec3::new(5.0, 0.0, -0.1),
            Vec3::new(0.0, 5.0, 0.0),
            Vec3::new(5.0, 5.0, 0.0),
        ];
        points.push(Vec3::new(2.5, 2.5, 0.05));
        let mesh = delaunay_25d(&cloud_of(points)).unwrap();
        assert!(mesh.triangle_count() >= 4);
    }
}
