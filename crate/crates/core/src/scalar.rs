use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{FromPrimitive, Num, NumAssign, ToPrimitive};

/// Numeric field the solvers and matrix routines are written against.
///
/// Implemented for `f32`, `f64` and exact rationals. Routines that need
/// square roots or powers ask for [`num_traits::Float`] on top of this.
pub trait Scalar:
    Num + NumAssign + Copy + PartialOrd + Debug + Sum + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Converts a tolerance literal into this type. Exact types round it to
    /// the nearest representable value.
    fn tol(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(Self::zero)
    }

    fn from_count(value: u64) -> Self {
        Self::from_u64(value).expect("count representable in scalar type")
    }

    fn abs_val(self) -> Self {
        if self < Self::zero() {
            Self::zero() - self
        } else {
            self
        }
    }

    fn max_val(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_val(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// Finite and not NaN. Always true for exact types.
    fn is_finite_val(self) -> bool {
        self.to_f64().is_some_and(f64::is_finite)
    }
}

impl<T> Scalar for T where
    T: Num + NumAssign + Copy + PartialOrd + Debug + Sum + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
}
