use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational numbers, used to run the recurrences without rounding.
pub type Rational = Ratio<BigInt>;

/// Field element the kernels and solver recurrences are written against.
///
/// Production code uses `f64`; [`Rational`] exists so that mathematically
/// equivalent variants can be compared exactly.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn to_f64(&self) -> f64;

    fn magnitude(&self) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn to_f64(&self) -> f64 {
        *self
    }

    #[inline]
    fn magnitude(&self) -> Self {
        self.abs()
    }
}

impl Scalar for Rational {
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn magnitude(&self) -> Self {
        self.abs()
    }
}
