//! Floating point abstraction shared by the statistics kernels.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// floating point: f32 or f64
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in every supported scalar")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn of_count(value: usize) -> Self {
        Self::from_usize(value).expect("count representable in every supported scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
