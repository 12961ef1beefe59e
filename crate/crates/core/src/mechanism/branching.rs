use serde::Serialize;

use super::levy::{Boundary, Cutoff, LevyMeasure};
use crate::error::{domain, Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::real::{cst, to_f64, Real};
use crate::roots::{expand_until, find_root};

/// `Φ(λ) = αλ + βλ² + ∫(e^{-λθ} - 1 + λθ) π(dθ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchingMechanism<T> {
    alpha: T,
    beta: T,
    levy: LevyMeasure<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Undetermined,
}

impl Verdict {
    pub fn holds(self) -> bool {
        self == Verdict::Holds
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionReport<T> {
    /// `β > 0` or `∫θπ(dθ) > -α`: Φ eventually positive.
    pub h0: bool,
    /// `β > 0` or `∫_(0,1) θπ(dθ) = ∞`: unbounded variation.
    pub h1: bool,
    /// `∫^∞ 1/Φ < ∞`.
    pub h2: Verdict,
    /// Largest root of Φ, defined when `h0` holds.
    pub largest_root_q: Option<T>,
    /// Numerical value of `∫_{λ'}^∞ dλ/Φ(λ)` when it was computed.
    pub grey_integral: Option<T>,
}

/// Jump region removed by truncation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "r")]
pub enum Region<T> {
    /// `(r, ∞)`
    OpenTail(T),
    /// `[r, ∞)`
    ClosedTail(T),
    /// `(0, ∞)`
    FullPositive,
}

const GREY_CUTOFF: f64 = 1e8;
const GREY_MIN_SLOPE: f64 = 1.05;

impl<T: Real> BranchingMechanism<T> {
    pub fn new(alpha: T, beta: T, levy: LevyMeasure<T>) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(domain("alpha", alpha));
        }
        if !(beta >= T::zero() && beta.is_finite()) {
            return Err(domain("beta", beta));
        }
        if alpha == T::zero() && beta == T::zero() && levy.is_zero() {
            return Err(Error::TrivialMechanism);
        }
        Ok(Self { alpha, beta, levy })
    }

    /// Bypasses the non-triviality check; only the simulator's degenerate
    /// path needs `Φ ≡ 0`.
    pub(crate) fn new_unchecked(alpha: T, beta: T, levy: LevyMeasure<T>) -> Self {
        Self { alpha, beta, levy }
    }

    /// `Φ(λ) = cλ^γ`.
    pub fn stable(gamma: T, c: T) -> Result<Self> {
        Self::new(T::zero(), T::zero(), LevyMeasure::stable(gamma, c)?)
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn levy(&self) -> &LevyMeasure<T> {
        &self.levy
    }

    pub fn phi(&self, lambda: T) -> Result<T> {
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(domain("lambda", lambda));
        }
        Ok(self.eval(lambda))
    }

    pub fn phi_prime(&self, lambda: T) -> Result<T> {
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(domain("lambda", lambda));
        }
        Ok(self.eval_prime(lambda))
    }

    /// Φ without argument checks.
    #[inline]
    pub(crate) fn eval(&self, lambda: T) -> T {
        (self.alpha + self.beta * lambda) * lambda + self.levy.compensated(lambda)
    }

    #[inline]
    pub(crate) fn eval_prime(&self, lambda: T) -> T {
        self.alpha + cst::<T>(2.0) * self.beta * lambda + self.levy.derivative_part(lambda)
    }

    pub fn classify(&self) -> Criticality {
        if self.alpha > T::zero() {
            Criticality::Subcritical
        } else if self.alpha == T::zero() {
            Criticality::Critical
        } else {
            Criticality::Supercritical
        }
    }

    pub fn h0(&self) -> bool {
        self.alpha >= T::zero()
            || self.beta > T::zero()
            || match self.levy.first_moment() {
                None => true,
                Some(m) => m > -self.alpha,
            }
    }

    pub fn h1(&self) -> bool {
        self.beta > T::zero() || self.levy.infinite_small_mean()
    }

    /// Largest root of Φ; `None` when Φ has no positive part.
    pub fn largest_root(&self) -> Option<T> {
        if self.alpha >= T::zero() {
            return Some(T::zero());
        }
        if !self.h0() {
            return None;
        }
        // Φ < 0 just right of 0; walk out until it turns positive
        let mut lo = tiny::<T>();
        while self.eval(lo) >= T::zero() {
            lo = lo / cst(16.0);
            if lo < T::min_positive_value() {
                return Some(T::zero());
            }
        }
        let mut hi = lo;
        loop {
            hi = hi * cst(2.0);
            if !hi.is_finite() {
                return None;
            }
            let v = self.eval(hi);
            if v > T::zero() {
                break;
            }
            lo = hi;
        }
        find_root(|l| self.eval(l), lo, hi).ok()
    }

    pub fn check_assumptions(&self) -> AssumptionReport<T> {
        let h0 = self.h0();
        let h1 = self.h1();
        let q = if h0 { self.largest_root() } else { None };
        let (h2, grey_integral) = if !h1 {
            (Verdict::Fails, None)
        } else if self.beta > T::zero() {
            (Verdict::Holds, None)
        } else {
            match q {
                Some(q) => self.grey_check(q),
                None => (Verdict::Undetermined, None),
            }
        };
        AssumptionReport {
            h0,
            h1,
            h2,
            largest_root_q: q,
            grey_integral,
        }
    }

    /// Integrates `1/Φ` on a logarithmic scale up to a large cutoff and
    /// bounds the remainder through the local power-law exponent of Φ there.
    fn grey_check(&self, q: T) -> (Verdict, Option<T>) {
        let start = q + T::one();
        let big = cst::<T>(GREY_CUTOFF).max(start * cst(1e4));
        let opts = QuadOptions {
            abs_tol: cst(1e-10),
            rel_tol: cst(1e-8),
            max_intervals: 400,
        };
        let body = integrate(
            |s: T| {
                let l = s.exp();
                l / self.eval(l)
            },
            start.ln(),
            big.ln(),
            &opts,
        );
        if !body.converged || !body.value.is_finite() {
            return (Verdict::Undetermined, None);
        }
        let phi = self.eval(big);
        let slope = big * self.eval_prime(big) / phi;
        if !(slope > cst(GREY_MIN_SLOPE)) {
            return (Verdict::Undetermined, Some(body.value));
        }
        let remainder = big / ((slope - T::one()) * phi);
        (Verdict::Holds, Some(body.value + remainder))
    }

    /// `π(A)`.
    pub fn region_mass(&self, region: Region<T>) -> T {
        match region {
            Region::OpenTail(r) => self.levy.tail(r, Boundary::Open),
            Region::ClosedTail(r) => self.levy.tail(r, Boundary::Closed),
            Region::FullPositive => self.levy.total_mass().unwrap_or(T::infinity()),
        }
    }

    /// `Φ^A`: jumps in `A` removed, drift raised by `∫_A θπ(dθ)`.
    pub fn truncate(&self, region: Region<T>) -> Result<Self> {
        let (mean, levy) = match region {
            Region::OpenTail(r) | Region::ClosedTail(r) => {
                if !(r > T::zero()) || !r.is_finite() {
                    return Err(domain("truncation level", r));
                }
                let (boundary, cut) = match region {
                    Region::OpenTail(_) => (Boundary::Open, Cutoff::AtMost(r)),
                    _ => (Boundary::Closed, Cutoff::Below(r)),
                };
                if self.levy.tail(r, boundary) == T::zero() {
                    return Ok(self.clone());
                }
                (self.levy.tail_mean(r, boundary), self.levy.restricted(cut))
            }
            Region::FullPositive => match self.levy.total_mass() {
                Some(_) => (self.levy.first_moment().unwrap_or(T::zero()), LevyMeasure::zero()),
                None => {
                    return Err(Error::Precondition(
                        "full truncation needs a finite Levy measure".into(),
                    ))
                }
            },
        };
        Ok(Self::new_unchecked(self.alpha + mean, self.beta, levy))
    }

    /// `Φ_θ(λ) = Φ(θ + λ) - Φ(θ)`.
    pub fn shift(&self, theta: T) -> Result<Self> {
        if theta == T::zero() {
            return Ok(self.clone());
        }
        if !self.levy.admits_tilt(theta) {
            return Err(domain("shift parameter", theta));
        }
        let alpha = self.alpha + cst::<T>(2.0) * self.beta * theta + self.levy.derivative_part(theta);
        let levy = self.levy.tilted(theta)?;
        Ok(Self::new_unchecked(alpha, self.beta, levy))
    }

    /// The unique `λ ≥ q` with `Φ(λ) = y`.
    pub fn phi_inverse(&self, y: T) -> Result<T> {
        if !(y >= T::zero()) || !y.is_finite() {
            return Err(domain("phi_inverse argument", y));
        }
        let q = self.largest_root().ok_or(Error::NoInverse)?;
        if y == T::zero() {
            return Ok(q);
        }
        let start = q.max(tiny()) * cst(2.0);
        let hi = expand_until(|l| self.eval(l), start, y).ok_or(Error::NoInverse)?;
        let lo = if hi == start { q } else { hi / cst(2.0) };
        find_root(|l| self.eval(l) - y, lo, hi)
    }

    pub fn describe(&self) -> String {
        format!(
            "alpha={} beta={} levy={:?} tilt={} cutoff={:?}",
            to_f64(self.alpha),
            to_f64(self.beta),
            self.levy.family(),
            to_f64(self.levy.tilt()),
            self.levy.cutoff()
        )
    }
}

fn tiny<T: Real>() -> T {
    cst::<T>(1e-8).max(T::epsilon().sqrt() * cst(1e-4))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn se() -> BranchingMechanism<f64> {
        BranchingMechanism::<f64>::new(1.0, 0.0, LevyMeasure::<f64>::exp_density(1.0, 1.0).unwrap()).unwrap()
    }

    fn atom_mech() -> BranchingMechanism<f64> {
        BranchingMechanism::<f64>::new(0.0, 1.0, LevyMeasure::<f64>::atoms(vec![(1.0, 1.0)]).unwrap()).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let s = BranchingMechanism::<f64>::stable(1.5, 1.0).unwrap();
        assert!((s.phi(4.0).unwrap() - 8.0).abs() < 1e-12);
        assert!((s.phi_prime(4.0).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(s.phi(0.0).unwrap(), 0.0);
        assert!((se().phi(1.0).unwrap() - 1.5).abs() < 1e-15);
        assert!((se().phi_prime(1.0).unwrap() - 1.75).abs() < 1e-15);
        assert!(s.phi(-1.0).is_err());
    }

    #[test]
    fn classification() {
        let m = |a: f64| BranchingMechanism::<f64>::new(a, 1.0, LevyMeasure::zero()).unwrap().classify();
        assert_eq!(m(0.0), Criticality::Critical);
        assert_eq!(m(1.0), Criticality::Subcritical);
        assert_eq!(m(-0.5), Criticality::Supercritical);
    }

    #[test]
    fn trivial_mechanism_rejected() {
        assert!(matches!(
            BranchingMechanism::<f64>::new(0.0, 0.0, LevyMeasure::<f64>::zero()),
            Err(Error::TrivialMechanism)
        ));
    }

    #[test]
    fn assumption_examples() {
        let r = BranchingMechanism::<f64>::stable(1.5, 1.0).unwrap().check_assumptions();
        assert!(r.h0 && r.h1 && r.h2.holds());
        assert_eq!(r.largest_root_q, Some(0.0));
        let r = BranchingMechanism::<f64>::new(1.0, 0.0, LevyMeasure::<f64>::atoms(vec![(1.0, 1.0)]).unwrap())
            .unwrap()
            .check_assumptions();
        assert!(r.h0 && !r.h1 && r.h2 == Verdict::Fails);
        let r = BranchingMechanism::<f64>::new(-0.5, 0.0, LevyMeasure::<f64>::exp_density(0.1, 10.0).unwrap())
            .unwrap()
            .check_assumptions();
        assert!(!r.h0 && r.largest_root_q.is_none());
    }

    #[test]
    fn grey_integral_of_stable() {
        // ∫_1^∞ λ^{-3/2} dλ = 2
        let r = BranchingMechanism::<f64>::stable(1.5, 1.0).unwrap().check_assumptions();
        assert!((r.grey_integral.unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn truncation_examples() {
        let t = atom_mech().truncate(Region::OpenTail(0.5)).unwrap();
        assert_eq!(t.alpha(), 1.0);
        assert!(t.levy().is_zero());
        assert!((t.phi(2.0).unwrap() - 6.0).abs() < 1e-15);
        let same = atom_mech().truncate(Region::OpenTail(1.0)).unwrap();
        assert_eq!(same, atom_mech());
        let t = se().truncate(Region::OpenTail(1.0)).unwrap();
        assert!((t.alpha() - (1.0 + 2.0 * (-1.0f64).exp())).abs() < 1e-15);
        assert!((t.alpha() - 1.7357588823428847).abs() < 1e-14);
        assert_eq!(t.levy().sup_support(), Some(1.0));
        assert!(BranchingMechanism::<f64>::stable(1.5, 1.0).unwrap().truncate(Region::FullPositive).is_err());
    }

    #[test]
    fn truncated_exp_formula() {
        // Φ^A(λ) = Φ(λ) + ∫_A (1 - e^{-λθ}) π(dθ) with A = (1, ∞)
        let t = se().truncate(Region::OpenTail(1.0)).unwrap();
        for &l in &[0.1, 1.0, 7.0] {
            let want = l + l * l / (1.0 + l) + (-1.0f64).exp() - (-(1.0 + l)).exp() / (1.0 + l);
            assert!((t.phi(l).unwrap() - want).abs() < 1e-13, "{l}");
        }
    }

    #[test]
    fn shift_examples() {
        let m = BranchingMechanism::<f64>::new(0.0, 1.0, LevyMeasure::zero()).unwrap();
        assert_eq!(m.shift(1.0).unwrap().alpha(), 2.0);
        assert_eq!(se().shift(0.0).unwrap(), se());
        let m = BranchingMechanism::<f64>::new(-0.5, 0.0, LevyMeasure::<f64>::exp_density(1.0, 1.0).unwrap()).unwrap();
        let s = m.shift(-0.5).unwrap();
        // -0.5 + ∫(1 - e^{0.5a}) a e^{-a} da = -0.5 + 1 - 4
        assert!((s.alpha() + 3.5).abs() < 1e-14);
        for &l in &[0.1, 0.3, 0.45] {
            let want = m.eval(l - 0.5) - m.eval(-0.5);
            assert!((s.phi(l).unwrap() - want).abs() < 1e-12);
        }
        assert!(m.shift(-1.0).is_err());
    }

    #[test]
    fn inverse_examples() {
        let s = BranchingMechanism::<f64>::stable(1.5, 1.0).unwrap();
        assert!((s.phi_inverse(8.0).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(s.phi_inverse(0.0).unwrap(), 0.0);
        let t = atom_mech().truncate(Region::OpenTail(0.5)).unwrap();
        assert!((t.phi_inverse(1.0).unwrap() - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-14);
        let bad = BranchingMechanism::<f64>::new(-0.5, 0.0, LevyMeasure::<f64>::exp_density(0.1, 10.0).unwrap()).unwrap();
        assert!(matches!(bad.phi_inverse(1.0), Err(Error::NoInverse)));
    }

    #[test]
    fn supercritical_root() {
        // Φ(λ) = -λ + λ²
        let m = BranchingMechanism::<f64>::new(-1.0, 1.0, LevyMeasure::zero()).unwrap();
        assert!((m.largest_root().unwrap() - 1.0).abs() < 1e-14);
        assert!((m.phi_inverse(2.0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn works_in_single_precision() {
        let s = BranchingMechanism::<f32>::stable(1.5, 1.0).unwrap();
        assert!((s.phi_inverse(8.0).unwrap() - 4.0).abs() < 1e-4);
    }
}
