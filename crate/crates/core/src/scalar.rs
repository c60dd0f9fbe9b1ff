//! Scalar abstractions shared by every table-backed computation.
//!
//! Table projection, broadcasting and min-propagation only need ordered ring
//! arithmetic, so they are generic over [`Scalar`]. That lets the junction
//! tree and the brute-force oracle run on exact rationals as well as floats.
//! Anything that takes logarithms (LMSR deltas, probability updates) needs
//! [`Real`].

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, Num};

/// Ordered ring element usable as a table cell.
pub trait Scalar: Copy + PartialOrd + Num + Debug + Send + Sync + 'static {
    /// `false` for NaN and the infinities; always `true` for exact types.
    fn is_finite_value(&self) -> bool {
        true
    }

    /// The smaller of two values. Incomparable values resolve to `self`.
    fn min_value(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f32 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f64 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for i64 {}
impl Scalar for i128 {}
impl Scalar for Ratio<i64> {}
impl Scalar for Ratio<i128> {}

/// Floating point scalar with transcendental functions.
pub trait Real: Scalar + Float {
    /// Converts an `f64` literal. Panics only if the target cannot represent
    /// finite `f64` values at all, which no `Float` implementor does.
    fn lit(value: f64) -> Self {
        <Self as num_traits::NumCast>::from(value).expect("float literal")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T: Scalar + Float> Real for T {}

/// `|a - b| <= tol * max(1, |b|)`.
pub fn approx_eq<F: Real>(a: F, b: F, tol: F) -> bool {
    (a - b).abs() <= tol * F::one().max(b.abs())
}
