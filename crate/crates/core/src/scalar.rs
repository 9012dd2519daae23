//! Numeric scalar abstraction shared by the transform, relation and SUT kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type the numeric kernels are generic over.
///
/// Implemented for `f32` and `f64`. The pipeline itself (trial logs, feature
/// vectors, reports) runs on `f64`; narrower types are useful for checking
/// that a relation or mutant is not an artefact of one precision.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).unwrap_or_else(Self::nan)
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

/// Sorts with the IEEE total order; NaNs end up last.
pub fn sorted<T: Scalar>(xs: &[T]) -> Vec<T> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or_else(|| a.is_nan().cmp(&b.is_nan())));
    v
}

/// Sum in ascending order. The result depends only on the multiset of inputs.
pub fn canonical_sum<T: Scalar>(xs: &[T]) -> T {
    sorted(xs).into_iter().fold(T::zero(), |acc, x| acc + x)
}
