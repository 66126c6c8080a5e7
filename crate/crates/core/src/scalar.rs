//! Scalar abstraction shared by every numerical kernel in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Real field used throughout: `f32` or `f64`.
///
/// Tolerances are written as `f64` literals and converted with [`Real::lit`],
/// so the same code path serves both precisions. Thresholds below the
/// precision of `f32` simply become unreachable there.
pub trait Real: Float + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static {
    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }

    /// Lossless-enough conversion for reporting and serialization.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Magnitude at or below which an entry counts as zero for support and
/// `ℓ0` counting.
pub const NUMERIC_ZERO: f64 = 1e-10;

/// `ℓ0` "norm" with the crate-wide numeric-zero threshold.
pub fn l0_count<T: Real>(v: &[T]) -> usize {
    let zero = T::lit(NUMERIC_ZERO);
    v.iter().filter(|x| x.abs() > zero).count()
}
