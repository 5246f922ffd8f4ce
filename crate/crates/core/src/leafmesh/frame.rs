//! Leaf-local coordinate frames from principal component analysis.

use crate::cloud::LabeledPointCloud;
use crate::error::{Error, Result};
use crate::geom::{centroid, covariance3, symmetric_eigen3, Vec3};
use crate::scalar::{real, Real};

/// Right-handed orthonormal frame whose x/y axes span the two directions of
/// largest point variance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeafFrame<T = f64> {
    pub origin: Vec3<T>,
    pub x: Vec3<T>,
    pub y: Vec3<T>,
    pub z: Vec3<T>,
}

impl<T: Real> LeafFrame<T> {
    /// Coordinates of `p` in this frame.
    pub fn to_local(&self, p: Vec3<T>) -> Vec3<T> {
        let d = p - self.origin;
        Vec3::new(d.dot(self.x), d.dot(self.y), d.dot(self.z))
    }

    /// In-plane projection of `p` (the local x/y coordinates).
    pub fn project(&self, p: Vec3<T>) -> (T, T) {
        let d = p - self.origin;
        (d.dot(self.x), d.dot(self.y))
    }
}

/// Orients `v` so its largest-magnitude component is positive, making the
/// frame deterministic across eigenvector sign flips.
fn fix_sign<T: Real>(v: Vec3<T>) -> Vec3<T> {
    let a = v.to_array();
    let mut dominant = a[0];
    for &c in &a[1..] {
        if c.abs() > dominant.abs() {
            dominant = c;
        }
    }
    if dominant < T::zero() {
        -v
    } else {
        v
    }
}

/// Computes the leaf's local right-handed frame: origin at the centroid,
/// x/y along the two principal directions of largest variance (sign-fixed),
/// z completing the right-handed basis.
pub fn leaf_axis_frame<T: Real>(leaf: &LabeledPointCloud<T>) -> Result<LeafFrame<T>> {
    let points = leaf.positions();
    if points.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "frame needs at least 3 points, got {}",
            points.len()
        )));
    }
    let origin = centroid(&points);
    let (values, vectors) = symmetric_eigen3(covariance3(&points));
    // Collinear (or fully coincident) points have no second principal
    // direction.
    if !(values[0] > T::zero()) || values[1] <= values[0] * real(1e-12) {
        return Err(Error::DegenerateGeometry("points are collinear".into()));
    }
    let x = fix_sign(vectors[0]);
    let y = fix_sign(vectors[1]);
    let z = x.cross(y);
    Ok(LeafFrame { origin, x, y, z })
}
