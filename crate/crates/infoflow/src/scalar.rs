//! Scalar abstraction over the float width the pipeline runs on.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar for the numeric kernels (`f32` or `f64`).
///
/// Tolerances are stated as `f64` values and clamped from below to a few
/// ulps of the target width, so the narrower type still converges where the
/// wider one hits the stated threshold exactly.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + FromStr
    + Display
    + LowerExp
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Lift an `f64` literal into the scalar width.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar width")
    }

    /// A convergence/guard tolerance: `spec`, clamped below by 8 ulps at 1.0.
    fn tol(spec: f64) -> Self {
        Self::of(spec).max(Self::epsilon() * Self::of(8.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}
