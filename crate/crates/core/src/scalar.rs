//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All geometry, bases, assembly and linear algebra are written against
//! [`Real`], which is implemented for `f32` and `f64`. Tolerances quoted in
//! tests assume `f64`; `f32` builds are useful for smoke testing only.

use std::fmt::LowerExp;
use std::iter::Sum;

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Floating point scalar usable by the solver.
pub trait Real: RealField + Copy + ToPrimitive + Sum + LowerExp {
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    /// Converts a count or index into `Self`.
    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        nalgebra::convert(n as f64)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// A relative tolerance stated for `f64`, widened to `10³·ε_mach` when
    /// `Self` is less precise.
    #[inline]
    fn tolerance(f64_value: f64) -> f64 {
        f64_value.max(1e3 * Self::default_epsilon().as_f64())
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// A point or vector in the plane.
pub type Vec2<T> = [T; 2];

#[inline]
pub(crate) fn dot2<T: Real>(a: Vec2<T>, b: Vec2<T>) -> T {
    a[0] * b[0] + a[1] * b[1]
}

/// Scalar cross product `a × b = a₁b₂ − a₂b₁`.
#[inline]
pub(crate) fn cross2<T: Real>(a: Vec2<T>, b: Vec2<T>) -> T {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub(crate) fn sub2<T: Real>(a: Vec2<T>, b: Vec2<T>) -> Vec2<T> {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn norm2<T: Real>(a: Vec2<T>) -> T {
    dot2(a, a).sqrt()
}
