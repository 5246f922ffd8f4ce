//! Scalar abstraction for the geometry kernels.
//!
//! All coordinate math in this crate is generic over [`Real`], so the same
//! kernels run in `f32` or `f64`. File I/O and the CLI pin `f64` (see the
//! crate-root aliases); millimetre thresholds well below 1e-3 make `f64` the
//! only sensible choice for production runs.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` constant into `T`. Panics only on non-finite input,
/// which would be a programming error for the literals this is used with.
#[inline]
pub fn real<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("literal must be representable")
}

/// `n as T`, for averaging over counts.
#[inline]
pub fn real_from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count must be representable")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip_in_both_widths() {
        let a: f64 = real(0.396);
        let b: f32 = real(0.396);
        assert_eq!(a, 0.396_f64);
        assert_eq!(b, 0.396_f32);
    }
}
