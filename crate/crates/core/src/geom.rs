//! Small 3D vector/matrix kernel shared by every module.

use serde::{Deserialize, Serialize};

use crate::scalar::{real, Real};

/// A 3-vector (positions are millimetres throughout the toolkit).
#[derive(Clone, Copy, PartialEq, Debug, Default, Serialize, Deserialize)]
pub struct Vec3<T = f64> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    pub fn distance_squared(self, o: Self) -> T {
        (self - o).norm_squared()
    }

    /// Unit vector, or `None` for (near-)zero input.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn min_components(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max_components(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_f64(self) -> Vec3<f64> {
        Vec3::new(
            self.x.to_f64().unwrap_or(f64::NAN),
            self.y.to_f64().unwrap_or(f64::NAN),
            self.z.to_f64().unwrap_or(f64::NAN),
        )
    }

    pub fn from_f64(v: Vec3<f64>) -> Self {
        Self::new(real(v.x), real(v.y), real(v.z))
    }
}

impl<T: Real> std::ops::Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> std::ops::Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> std::ops::Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> std::ops::Div<T> for Vec3<T> {
    type Output = Self;
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<T: Real> std::ops::Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> std::ops::AddAssign for Vec3<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// Arithmetic mean of a point set. Returns the origin for an empty slice.
pub fn centroid<T: Real>(points: &[Vec3<T>]) -> Vec3<T> {
    if points.is_empty() {
        return Vec3::zero();
    }
    let mut sum = Vec3::zero();
    for p in points {
        sum += *p;
    }
    sum / crate::scalar::real_from_usize(points.len())
}

/// Distance from `p` to the closed segment `ab`.
pub fn point_segment_distance<T: Real>(p: Vec3<T>, a: Vec3<T>, b: Vec3<T>) -> T {
    let ab = b - a;
    let len_sq = ab.norm_squared();
    if len_sq == T::zero() {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len_sq).max(T::zero()).min(T::one());
    p.distance(a + ab * t)
}

/// 3x3 covariance matrix of a point set about its centroid (unnormalised
/// divisor `n`).
pub fn covariance3<T: Real>(points: &[Vec3<T>]) -> [[T; 3]; 3] {
    let c = centroid(points);
    let mut m = [[T::zero(); 3]; 3];
    for p in points {
        let d = (*p - c).to_array();
        for (i, di) in d.iter().enumerate() {
            for (j, dj) in d.iter().enumerate() {
                m[i][j] += *di * *dj;
            }
        }
    }
    if !points.is_empty() {
        let n = crate::scalar::real_from_usize::<T>(points.len());
        for row in &mut m {
            for v in row.iter_mut() {
                *v /= n;
            }
        }
    }
    m
}

/// Eigen-decomposition of a symmetric 3x3 matrix via cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` sorted by descending eigenvalue;
/// `eigenvectors[i]` is the unit eigenvector for `eigenvalues[i]`.
pub fn symmetric_eigen3<T: Real>(m: [[T; 3]; 3]) -> ([T; 3], [Vec3<T>; 3]) {
    let mut a = m;
    let mut v = [[T::zero(); 3]; 3];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }

    let eps = real::<T>(1e-30);
    for _sweep in 0..64 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
        if off <= eps * (diag + eps) {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q] == T::zero() {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (real::<T>(2.0) * a[p][q]);
            let t = {
                let s = if theta >= T::zero() { T::one() } else { -T::one() };
                s / (theta.abs() + (theta * theta + T::one()).sqrt())
            };
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;

            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in &mut v {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap_or(std::cmp::Ordering::Equal));

    let values = [a[order[0]][order[0]], a[order[1]][order[1]], a[order[2]][order[2]]];
    let vectors = [
        Vec3::new(v[0][order[0]], v[1][order[0]], v[2][order[0]]),
        Vec3::new(v[0][order[1]], v[1][order[1]], v[2][order[1]]),
        Vec3::new(v[0][order[2]], v[1][order[2]], v[2][order[2]]),
    ];
    (values, vectors)
}

/// Rigid motion (rotation then translation). Mostly handy for building
/// invariance tests; the toolkit itself never registers scans.
#[derive(Clone, Copy, Debug)]
pub struct Rigid<T = f64> {
    pub rotation: [[T; 3]; 3],
    pub translation: Vec3<T>,
}

impl<T: Real> Rigid<T> {
    pub fn identity() -> Self {
        let mut r = [[T::zero(); 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            row[i] = T::one();
        }
        Self { rotation: r, translation: Vec3::zero() }
    }

    /// Rotation by `angle` radians about the (normalised) `axis`, followed by
    /// `translation`.
    pub fn from_axis_angle(axis: Vec3<T>, angle: T, translation: Vec3<T>) -> Self {
        let u = axis.normalized().unwrap_or(Vec3::new(T::zero(), T::zero(), T::one()));
        let (s, c) = (angle.sin(), angle.cos());
        let t = T::one() - c;
        let rotation = [
            [c + u.x * u.x * t, u.x * u.y * t - u.z * s, u.x * u.z * t + u.y * s],
            [u.y * u.x * t + u.z * s, c + u.y * u.y * t, u.y * u.z * t - u.x * s],
            [u.z * u.x * t - u.y * s, u.z * u.y * t + u.x * s, c + u.z * u.z * t],
        ];
        Self { rotation, translation }
    }

    pub fn apply(&self, p: Vec3<T>) -> Vec3<T> {
        let r = &self.rotation;
        Vec3::new(
            r[0][0] * p.x + r[0][1] * p.y + r[0][2] * p.z,
            r[1][0] * p.x + r[1][1] * p.y + r[1][2] * p.z,
            r[2][0] * p.x + r[2][1] * p.y + r[2][2] * p.z,
        ) + self.translation
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cross_follows_right_hand_rule() {
        let x = Vec3::new(1.0, 0.0, 0.0);
        let y = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(x.cross(y), Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn segment_distance_clamps_to_endpoints() {
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(10.0, 0.0, 0.0);
        assert_relative_eq!(point_segment_distance(Vec3::new(5.0, 3.0, 0.0), a, b), 3.0);
        assert_relative_eq!(point_segment_distance(Vec3::new(-4.0, 3.0, 0.0), a, b), 5.0);
        assert_relative_eq!(point_segment_distance(Vec3::new(14.0, 3.0, 0.0), a, b), 5.0);
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // diag(5, 2, 1) conjugated by a rotation about (1,1,1).
        let rot = Rigid::from_axis_angle(Vec3::new(1.0, 1.0, 1.0), 0.9, Vec3::zero());
        let d = [5.0, 2.0, 1.0];
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for (k, dk) in d.iter().enumerate() {
                    acc += rot.rotation[i][k] * dk * rot.rotation[j][k];
                }
                m[i][j] = acc;
            }
        }
        let (vals, vecs) = symmetric_eigen3(m);
        assert_relative_eq!(vals[0], 5.0, epsilon = 1e-12);
        assert_relative_eq!(vals[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(vals[2], 1.0, epsilon = 1e-12);
        for (i, v) in vecs.iter().enumerate() {
            assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-12);
            // M v = lambda v
            let mv = Vec3::new(
                m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
            );
            assert_relative_eq!(mv.x, vals[i] * v.x, epsilon = 1e-9);
            assert_relative_eq!(mv.y, vals[i] * v.y, epsilon = 1e-9);
            assert_relative_eq!(mv.z, vals[i] * v.z, epsilon = 1e-9);
        }
    }

    #[test]
    fn rigid_preserves_distances() {
        let t = Rigid::from_axis_angle(Vec3::new(0.3, -1.0, 0.7), 1.2, Vec3::new(4.0, -2.0, 9.0));
        let a = Vec3::new(1.0, 2.0, 3.0);
        let b = Vec3::new(-2.0, 0.5, 1.0);
        assert_relative_eq!(t.apply(a).distance(t.apply(b)), a.distance(b), epsilon = 1e-12);
    }
}
