//! Scalar abstraction shared by the analytic side of the crate.

use num_traits::{Float, FloatConst, FromPrimitive};
use std::fmt::{Debug, Display, LowerExp};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn cst<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

#[inline]
pub(crate) fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Tolerance `tol`, floored at a small multiple of the type's machine epsilon.
#[inline]
pub(crate) fn tol<T: Real>(tol: f64) -> T {
    cst::<T>(tol).max(T::epsilon() * cst(32.0))
}

/// `e^{-x} - 1 + x`, accurate for small `x`.
pub(crate) fn compensated_exp<T: Real>(x: T) -> T {
    if x.abs() < cst(1e-3) {
        let x2 = x * x;
        x2 * (cst::<T>(0.5) - x / cst(6.0) + x2 / cst(24.0) - x2 * x / cst(120.0))
    } else {
        (-x).exp_m1() + x
    }
}

/// `1 - e^{-x}`.
#[inline]
pub(crate) fn one_minus_exp<T: Real>(x: T) -> T {
    -(-x).exp_m1()
}

/// A nonnegative quantity that may be `+∞` for structural reasons.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extended<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> Extended<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Extended::Infinite)
    }

    /// `e^{-x·self}`, which is `0` at infinity.
    pub fn exp_neg_scaled(self, x: T) -> T {
        match self {
            Extended::Finite(v) => (-x * v).exp(),
            Extended::Infinite => T::zero(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_exp_matches_direct_formula() {
        for &x in &[1e-8, 1e-4, 9e-4, 1.1e-3, 0.3, 2.0, 40.0] {
            let direct = (-x as f64).exp() - 1.0 + x;
            let got = compensated_exp(x);
            if x > 1e-2 {
                assert!((got - direct).abs() <= 1e-14 * direct.abs().max(1.0));
            } else {
                assert!((got - x * x / 2.0).abs() <= x * x * x);
            }
        }
    }

    #[test]
    fn tolerance_respects_precision() {
        assert_eq!(tol::<f64>(1e-10), 1e-10);
        assert!(tol::<f32>(1e-10) > 1e-7);
    }
}
