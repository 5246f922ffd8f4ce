//! Leaf surface reconstruction and area error metrics.
//!
//! Three meshing routes with different failure modes: a 2.5D Delaunay
//! triangulation in the leaf's dominant plane (fast, spikes on furled
//! leaves), plain ball pivoting (density-sensitive), and a cleanup
//! pipeline around multi-radius ball pivoting (outlier removal, uniform
//! sub-sampling, hole closing).

mod bpa;
mod delaunay;
mod frame;
mod zabawa;

pub use bpa::{ball_pivoting, ball_pivoting_with_radii, BallPivotParams};
pub use delaunay::{delaunay_25d, delaunay_triangulation};
pub use frame::{leaf_axis_frame, LeafFrame};
pub use zabawa::{zabawa_mesh, ZabawaParams};

use crate::error::{Error, Result};
use crate::scalar::{real_from_usize, Real};

/// Mean absolute percentage error between estimated and ground-truth
/// areas: `(1/n) * sum(|gt - est| / gt)`.
pub fn area_mape<T: Real>(estimates: &[T], ground_truths: &[T]) -> Result<T> {
    if estimates.len() != ground_truths.len() {
        return Err(Error::LengthMismatch { left: estimates.len(), right: ground_truths.len() });
    }
    if estimates.is_empty() {
        return Err(Error::EmptyInput("area_mape needs at least one pair"));
    }
    let mut sum = T::zero();
    for (i, (est, gt)) in estimates.iter().zip(ground_truths).enumerate() {
        if !(*gt > T::zero()) {
            return Err(Error::ZeroGroundTruth { index: i });
        }
        sum += ((*gt - *est) / *gt).abs();
    }
    Ok(sum / real_from_usize(estimates.len()))
}
