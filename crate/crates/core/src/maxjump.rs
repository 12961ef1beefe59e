//! Closed-form laws: maximal jumps, first jump time, total mass, height and
//! width.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::laplace::{u_at, u_infinity, vbar};
use crate::mechanism::{Boundary, BranchingMechanism, Criticality, LevyFamily, Region};
use crate::real::{cst, Extended, Real};

/// Length of the observation window `(0, t]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Window<T> {
    Finite(T),
    Infinite,
}

/// Maximal-jump question about `sup_{s ∈ window} ΔX_s` under `P_x`.
///
/// `boundary` names the removed region `A`: [`Boundary::Open`] is `(r, ∞)`
/// and yields `P[sup ≤ r]`, [`Boundary::Closed`] is `[r, ∞)` and yields
/// `P[sup < r]`.
#[derive(Clone, Copy, Debug)]
pub struct JumpLawQuery<'m, T> {
    pub mech: &'m BranchingMechanism<T>,
    pub x: T,
    pub window: Window<T>,
    pub r: T,
    pub boundary: Boundary,
}

impl<'m, T: Real> JumpLawQuery<'m, T> {
    pub fn new(mech: &'m BranchingMechanism<T>, x: T, window: Window<T>, r: T) -> Self {
        Self {
            mech,
            x,
            window,
            r,
            boundary: Boundary::Open,
        }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.x > T::zero()) || !self.x.is_finite() {
            return Err(domain("x", self.x));
        }
        if !(self.r > T::zero()) || !self.r.is_finite() {
            return Err(domain("r", self.r));
        }
        if let Window::Finite(t) = self.window {
            if !(t > T::zero()) || !t.is_finite() {
                return Err(domain("t", t));
            }
        }
        if self.mech.levy().is_zero() {
            return Err(Error::Domain {
                what: "Levy measure (must be nonzero)",
                value: 0.0,
            });
        }
        Ok(())
    }

    /// Removed region; the two boundaries coincide when `π({r}) = 0`.
    pub fn region(&self) -> Region<T> {
        match self.boundary {
            Boundary::Closed if self.mech.levy().point_mass(self.r) > T::zero() => Region::ClosedTail(self.r),
            _ => Region::OpenTail(self.r),
        }
    }
}

/// `(1 - e^{-αt})/α`, equal to `t` at `α = 0`.
pub fn discounted_time<T: Real>(alpha: T, t: T) -> T {
    if alpha.abs() < cst(1e-12) {
        t
    } else {
        -(-alpha * t).exp_m1() / alpha
    }
}

/// `P_x[sup_{(0,t]} ΔX ∉ A] = exp(-x u^A_t[π(A)])`.
pub fn local_max_jump_cdf<T: Real>(q: &JumpLawQuery<'_, T>) -> Result<T> {
    q.validate()?;
    let t = match q.window {
        Window::Finite(t) => t,
        Window::Infinite => return Err(Error::Precondition("local law needs a finite window".into())),
    };
    let region = q.region();
    let mass = q.mech.region_mass(region);
    if mass == T::zero() {
        return Ok(T::one());
    }
    let trunc = q.mech.truncate(region)?;
    Ok((-q.x * u_at(&trunc, mass, t)?).exp())
}

/// Point mass of the global law at `sup π` in the supercritical case.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupAtom<T> {
    pub location: Extended<T>,
    pub mass: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GlobalJumpLaw<T> {
    pub cdf: T,
    pub atom_at_sup: Option<SupAtom<T>>,
}

/// Law of `sup_{s>0} ΔX_s`: `exp(-x (Φ^A)^{-1}[π(A)])` when Φ is eventually
/// positive, `0` otherwise.
pub fn global_max_jump_law<T: Real>(q: &JumpLawQuery<'_, T>) -> Result<GlobalJumpLaw<T>> {
    q.validate()?;
    let mech = q.mech;
    let sup = match mech.levy().sup_support() {
        Some(s) => Extended::Finite(s),
        None => Extended::Infinite,
    };
    let supercritical = mech.classify() == Criticality::Supercritical;
    if !mech.h0() {
        return Ok(GlobalJumpLaw {
            cdf: T::zero(),
            atom_at_sup: Some(SupAtom {
                location: sup,
                mass: T::one(),
            }),
        });
    }
    let region = q.region();
    let mass = mech.region_mass(region);
    let atom = if supercritical {
        let q0 = mech.phi_inverse(T::zero())?;
        Some(SupAtom {
            location: sup,
            mass: -(-q.x * q0).exp_m1(),
        })
    } else {
        None
    };
    let cdf = if mass == T::zero() {
        T::one()
    } else {
        let trunc = mech.truncate(region)?;
        (-q.x * trunc.phi_inverse(mass)?).exp()
    };
    Ok(GlobalJumpLaw { cdf, atom_at_sup: atom })
}

pub fn global_max_jump_cdf<T: Real>(q: &JumpLawQuery<'_, T>) -> Result<T> {
    Ok(global_max_jump_law(q)?.cdf)
}

/// `P_x[no jump in the window]`.
pub fn max_jump_atom_at_zero<T: Real>(mech: &BranchingMechanism<T>, x: T, window: Window<T>) -> Result<T> {
    if !(x > T::zero()) {
        return Err(domain("x", x));
    }
    if mech.levy().is_zero() {
        return Err(Error::Domain {
            what: "Levy measure (must be nonzero)",
            value: 0.0,
        });
    }
    let total = match mech.levy().total_mass() {
        None => return Ok(T::zero()),
        Some(m) => m,
    };
    let zero = mech.truncate(Region::FullPositive)?;
    match window {
        Window::Finite(t) => Ok((-x * u_at(&zero, total, t)?).exp()),
        Window::Infinite => {
            if !mech.h0() {
                return Ok(T::zero());
            }
            Ok((-x * zero.phi_inverse(total)?).exp())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Asymptote<T> {
    /// Multiplier in front of `π(A)`.
    pub coefficient: T,
    pub tail: T,
    pub value: T,
    pub note: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AsymptoteReport<T> {
    Ratio(Asymptote<T>),
    /// `P[sup ΔX > r] / π(r, ∞) → ∞`.
    Divergent { note: &'static str },
}

impl<T: Real> AsymptoteReport<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            AsymptoteReport::Ratio(a) => Some(a.value),
            AsymptoteReport::Divergent { .. } => None,
        }
    }
}

fn asymptote_for<T: Real>(alpha: T, scale: T, window: Window<T>, tail: T) -> AsymptoteReport<T> {
    match window {
        Window::Finite(t) => {
            let coefficient = scale * discounted_time(alpha, t);
            AsymptoteReport::Ratio(Asymptote {
                coefficient,
                tail,
                value: coefficient * tail,
                note: "local window, r -> sup of support",
            })
        }
        Window::Infinite if alpha > T::zero() => {
            let coefficient = scale / alpha;
            AsymptoteReport::Ratio(Asymptote {
                coefficient,
                tail,
                value: coefficient * tail,
                note: "global, subcritical, r -> sup of support",
            })
        }
        Window::Infinite => AsymptoteReport::Divergent {
            note: "global ratio to the Levy tail diverges when alpha <= 0",
        },
    }
}

/// Leading-order behaviour of `P_x[sup ΔX ∈ A]` as `r` approaches `sup π`.
pub fn tail_asymptote<T: Real>(q: &JumpLawQuery<'_, T>) -> Result<AsymptoteReport<T>> {
    q.validate()?;
    let levy = q.mech.levy();
    if let Some(s) = levy.sup_support() {
        if levy.point_mass(s) > T::zero() {
            return Err(Error::Precondition(
                "tail asymptotics need an unbounded measure or no atom at its supremum".into(),
            ));
        }
    }
    let tail = q.mech.region_mass(q.region());
    Ok(asymptote_for(q.mech.alpha(), q.x, q.window, tail))
}

/// Density of the global maximal jump on `(0, ∞)`: `-x e^{-x n_r} dn_r/dr`
/// with `n_r = (Φ^r)^{-1}[π(r, ∞)]`.
pub fn global_max_jump_density<T: Real>(mech: &BranchingMechanism<T>, x: T, r: T) -> Result<T> {
    if mech.classify() == Criticality::Supercritical {
        return Err(Error::Precondition("density is for (sub)critical mechanisms".into()));
    }
    if matches!(mech.levy().family(), LevyFamily::FiniteAtoms(_) | LevyFamily::Zero) {
        return Err(Error::Precondition("density needs an absolutely continuous Levy measure".into()));
    }
    if !(r > T::zero()) || !(x > T::zero()) {
        return Err(domain("r", r));
    }
    let n = |r: T| -> Result<T> { excursion_global(mech, r) };
    let h = cst::<T>(1e-5).max(cst::<T>(1e-5) * r).min(r / cst(2.0));
    let dn = (n(r + h)? - n(r - h)?) / (cst::<T>(2.0) * h);
    let nr = n(r)?;
    Ok((-x * dn * (-x * nr).exp()).max(T::zero()))
}

fn excursion_global<T: Real>(mech: &BranchingMechanism<T>, r: T) -> Result<T> {
    let mass = mech.region_mass(Region::OpenTail(r));
    if mass == T::zero() {
        return Ok(mech.largest_root().ok_or(Error::NoInverse)?);
    }
    mech.truncate(Region::OpenTail(r))?.phi_inverse(mass)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FirstJumpLaw<T> {
    /// `P_x[τ_A > t]`.
    pub survival: T,
    /// Density `g_A(t)` of `τ_A`.
    pub density: T,
    /// `P_x[τ_A = ∞]`.
    pub never: T,
}

/// Law of the first time a jump lands in `A = (a, ∞)`.
pub fn first_jump_time_law<T: Real>(mech: &BranchingMechanism<T>, x: T, a: T, t: T) -> Result<FirstJumpLaw<T>> {
    if !(a > T::zero()) {
        return Err(domain("a", a));
    }
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(domain("t", t));
    }
    let region = Region::OpenTail(a);
    let mass = mech.region_mass(region);
    if mass == T::zero() {
        return Ok(FirstJumpLaw {
            survival: T::one(),
            density: T::zero(),
            never: T::one(),
        });
    }
    let trunc = mech.truncate(region)?;
    let u = u_at(&trunc, mass, t)?;
    let survival = (-x * u).exp();
    let density = x * (mass - trunc.phi(u)?) * survival;
    let never = u_infinity(&trunc, mass)?.exp_neg_scaled(x);
    Ok(FirstJumpLaw {
        survival,
        density,
        never,
    })
}

/// The bound `e^{-αt} x π(A)` on the first-jump density.
pub fn first_jump_density_bound<T: Real>(mech: &BranchingMechanism<T>, x: T, a: T, t: T) -> T {
    (-mech.alpha() * t).exp() * x * mech.region_mass(Region::OpenTail(a))
}

/// `E_x[e^{-λσ}] = exp(-x Φ^{-1}(λ))`, zero when Φ never becomes positive.
pub fn total_mass_laplace<T: Real>(mech: &BranchingMechanism<T>, x: T, lambda: T) -> Result<T> {
    if !(lambda > T::zero()) {
        return Err(domain("lambda", lambda));
    }
    Ok(u_infinity(mech, lambda)?.exp_neg_scaled(x))
}

/// `P_x[H ≤ t] = exp(-x v̄_t)`.
pub fn height_cdf<T: Real>(mech: &BranchingMechanism<T>, x: T, t: T) -> Result<T> {
    Ok(vbar(mech, t)?.exp_neg_scaled(x))
}

/// `h_x(t) = x e^{-x v̄_t} Φ(v̄_t)`.
pub fn height_density<T: Real>(mech: &BranchingMechanism<T>, x: T, t: T) -> Result<T> {
    match vbar(mech, t)? {
        Extended::Finite(v) => Ok(x * (-x * v).exp() * mech.phi(v)?),
        Extended::Infinite => Ok(T::zero()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WidthTail<T> {
    pub upper: Option<T>,
    pub lower: Option<T>,
    pub exact: Option<T>,
    pub asymptote: Option<T>,
}

/// Bounds and known values for `P_x[sup_t X_t > r]`.
pub fn width_tail<T: Real>(mech: &BranchingMechanism<T>, x: T, r: T) -> Result<WidthTail<T>> {
    if !(x > T::zero()) || !(r > T::zero()) {
        return Err(domain("r", r));
    }
    let alpha = mech.alpha();
    let levy = mech.levy();
    let upper = (alpha >= T::zero()).then(|| x / r);
    let lower = match levy.sup_support() {
        Some(b) if alpha == T::zero() && r > x => Some(x / (r + b)),
        _ => None,
    };
    let exact = (alpha == T::zero() && levy.is_zero() && mech.beta() > T::zero() && r >= x).then(|| x / r);
    let asymptote = match levy.family() {
        LevyFamily::StablePower { gamma, .. }
            if alpha == T::zero()
                && mech.beta() == T::zero()
                && levy.tilt() == T::zero()
                && levy.cutoff().is_none() =>
        {
            Some(x * (*gamma - T::one()) / r)
        }
        _ => None,
    };
    Ok(WidthTail {
        upper,
        lower,
        exact,
        asymptote,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExcursionQuantities<T> {
    /// Excursion measure of `{sup Δω > r}` over the window.
    pub measure: T,
    pub asymptote: AsymptoteReport<T>,
}

/// Excursion-measure counterparts of the maximal-jump laws.
pub fn excursion_quantities<T: Real>(
    mech: &BranchingMechanism<T>,
    window: Window<T>,
    r: T,
) -> Result<ExcursionQuantities<T>> {
    if !mech.h1() {
        return Err(Error::Precondition("excursion quantities need unbounded variation".into()));
    }
    if mech.levy().is_zero() {
        return Err(Error::Domain {
            what: "Levy measure (must be nonzero)",
            value: 0.0,
        });
    }
    if !(r > T::zero()) {
        return Err(domain("r", r));
    }
    let region = Region::OpenTail(r);
    let mass = mech.region_mass(region);
    let measure = if mass == T::zero() {
        T::zero()
    } else {
        let trunc = mech.truncate(region)?;
        match window {
            Window::Finite(t) => u_at(&trunc, mass, t)?,
            Window::Infinite => trunc.phi_inverse(mass)?,
        }
    };
    Ok(ExcursionQuantities {
        measure,
        asymptote: asymptote_for(mech.alpha(), T::one(), window, mass),
    })
}
