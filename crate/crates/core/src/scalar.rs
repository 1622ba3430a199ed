//! Scalar abstraction for the numeric routines.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar all numeric routines are generic over.
///
/// Implemented for `f32` and `f64`. Randomness is always drawn in `f64`
/// and converted through [`Scalar::cast`], so a fixed seed produces the
/// same sequence for both scalar types up to rounding.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn cast(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 value representable as scalar")
    }

    /// Converts a count into this scalar type.
    fn from_count(v: usize) -> Self {
        Self::cast(v as f64)
    }

    /// Widens this scalar to `f64`.
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
