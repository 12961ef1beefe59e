//! Bracketed root finding for monotone functions.

use crate::error::{Error, Result};
use crate::real::{cst, Real};

const MAX_ITER: usize = 300;

/// Finds `x ∈ [lo, hi]` with `f(x) = 0` given `f(lo) ≤ 0 ≤ f(hi)`.
///
/// Illinois regula falsi, falling back to bisection whenever an
/// interpolation step fails to halve the bracket.
pub fn find_root<T: Real, F: Fn(T) -> T>(f: F, mut lo: T, mut hi: T) -> Result<T> {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo.is_nan() || fhi.is_nan() {
        return Err(Error::Numerical("root bracket evaluates to NaN".into()));
    }
    if flo > T::zero() || fhi < T::zero() {
        return Err(Error::Numerical(format!(
            "root not bracketed: f({lo}) = {flo}, f({hi}) = {fhi}"
        )));
    }
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    let two = cst::<T>(2.0);
    let mut side = 0i8;
    let mut width = hi - lo;
    for _ in 0..MAX_ITER {
        let scale = lo.abs().max(hi.abs()).max(T::min_positive_value());
        if hi - lo <= T::epsilon() * cst(4.0) * scale {
            break;
        }
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = (lo + hi) / two;
        }
        let fx = f(x);
        if fx.is_nan() {
            return Err(Error::Numerical(format!("objective is NaN at {x}")));
        }
        if fx == T::zero() {
            return Ok(x);
        }
        if fx < T::zero() {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi = fhi / two;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo = flo / two;
            }
            side = 1;
        }
        let new_width = hi - lo;
        if new_width > width / two {
            let mid = (lo + hi) / two;
            let fm = f(mid);
            if fm.is_nan() {
                return Err(Error::Numerical(format!("objective is NaN at {mid}")));
            }
            if fm == T::zero() {
                return Ok(mid);
            }
            if fm < T::zero() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
                fhi = fm;
            }
            side = 0;
        }
        width = hi - lo;
    }
    Ok(if -flo < fhi { lo } else { hi })
}

/// Doubles `start` until `f(x) ≥ target` and returns `x`, or `None` if the
/// scalar range is exhausted.
pub fn expand_until<T: Real, F: Fn(T) -> T>(f: F, start: T, target: T) -> Option<T> {
    let mut x = start;
    while x.is_finite() {
        let fx = f(x);
        if fx >= target {
            return Some(x);
        }
        if fx.is_nan() {
            return None;
        }
        x = x * cst(2.0);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_of_two() {
        let r = find_root(|x: f64| x * x - 2.0, 0.0, 2.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn flat_then_steep() {
        let r = find_root(|x: f64| (x - 0.3).powi(9) * 1e3, -1.0, 5.0).unwrap();
        assert!((r - 0.3).abs() < 1e-3);
    }

    #[test]
    fn unbracketed_is_error() {
        assert!(find_root(|x: f64| x * x + 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn expansion_finds_upper_point() {
        let hi = expand_until(|x: f64| x.ln(), 1e-8, 5.0).unwrap();
        assert!(hi.ln() >= 5.0 && (hi / 2.0).ln() < 5.0);
    }
}
