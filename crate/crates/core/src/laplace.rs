//! Laplace-exponent flows `v_t(λ)`, mass flows `u_t(λ)` and the extinction
//! function `v̄_t`.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::mechanism::{BranchingMechanism, Verdict};
use crate::ode::{solve, OdeOptions, Trajectory};
use crate::quad::{integrate, QuadOptions};
use crate::real::{cst, tol, Extended, Real};
use crate::roots::find_root;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    /// `dv/dt = -Φ(v)`, `v_0 = λ`.
    V,
    /// `du/dt = λ - Φ(u)`, `u_0 = 0`.
    U,
}

/// A solved flow, queryable anywhere on `[0, horizon]`.
#[derive(Clone, Debug)]
pub struct FlowSolution<T> {
    kind: FlowKind,
    lambda: T,
    traj: Trajectory<T, 1>,
}

impl<T: Real> FlowSolution<T> {
    pub fn kind(&self) -> FlowKind {
        self.kind
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// Forcing constant: `0` for the v-flow, `λ` for the u-flow.
    pub fn forcing(&self) -> T {
        match self.kind {
            FlowKind::V => T::zero(),
            FlowKind::U => self.lambda,
        }
    }

    pub fn horizon(&self) -> T {
        self.traj.t_end()
    }

    pub fn value(&self, t: T) -> T {
        self.traj.eval(t)[0]
    }

    pub fn terminal(&self) -> T {
        self.traj.last()[0]
    }

    pub fn times(&self) -> &[T] {
        &self.traj.t
    }

    pub fn values(&self) -> Vec<T> {
        self.traj.y.iter().map(|y| y[0]).collect()
    }
}

fn flow_options<T: Real>() -> OdeOptions<T> {
    OdeOptions {
        rtol: tol(1e-11),
        atol: tol(1e-15),
        ..OdeOptions::default()
    }
}

fn check_flow_args<T: Real>(lambda: T, horizon: T) -> Result<()> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(domain("lambda", lambda));
    }
    if !(horizon >= T::zero()) || !horizon.is_finite() {
        return Err(domain("horizon", horizon));
    }
    Ok(())
}

/// Solves `dv/dt = -Φ(v)` from `v_0 = λ`.
pub fn solve_v<T: Real>(mech: &BranchingMechanism<T>, lambda: T, horizon: T) -> Result<FlowSolution<T>> {
    check_flow_args(lambda, horizon)?;
    let traj = solve(
        |_, y: &[T; 1]| [-mech.eval(y[0].max(T::zero()))],
        T::zero(),
        [lambda],
        horizon,
        &flow_options(),
    )?;
    Ok(FlowSolution {
        kind: FlowKind::V,
        lambda,
        traj,
    })
}

/// Solves `du/dt = λ - Φ(u)` from `u_0 = 0`.
pub fn solve_u<T: Real>(mech: &BranchingMechanism<T>, lambda: T, horizon: T) -> Result<FlowSolution<T>> {
    check_flow_args(lambda, horizon)?;
    let traj = solve(
        |_, y: &[T; 1]| [lambda - mech.eval(y[0].max(T::zero()))],
        T::zero(),
        [T::zero()],
        horizon,
        &flow_options(),
    )?;
    Ok(FlowSolution {
        kind: FlowKind::U,
        lambda,
        traj,
    })
}

/// Terminal value of `dw/dt = f - Φ(w)` from `w_0 = w0`. With `f = π(A)` and
/// the truncated mechanism this gives `E_x[e^{-w0 X_t}; no jump in A]`.
pub fn forced_flow_at<T: Real>(mech: &BranchingMechanism<T>, forcing: T, w0: T, t: T) -> Result<T> {
    check_flow_args(forcing, t)?;
    if !(w0 >= T::zero()) || !w0.is_finite() {
        return Err(domain("initial value", w0));
    }
    let traj = solve(
        |_, y: &[T; 1]| [forcing - mech.eval(y[0].max(T::zero()))],
        T::zero(),
        [w0],
        t,
        &flow_options(),
    )?;
    Ok(traj.last()[0])
}

pub fn v_at<T: Real>(mech: &BranchingMechanism<T>, lambda: T, t: T) -> Result<T> {
    if lambda == T::zero() {
        return Ok(T::zero());
    }
    Ok(solve_v(mech, lambda, t)?.terminal())
}

pub fn u_at<T: Real>(mech: &BranchingMechanism<T>, lambda: T, t: T) -> Result<T> {
    if lambda == T::zero() {
        return Ok(T::zero());
    }
    Ok(solve_u(mech, lambda, t)?.terminal())
}

/// `(v_t(λ), ∂v_t(λ)/∂λ)` from the flow and its variational equation.
pub fn v_with_derivative<T: Real>(mech: &BranchingMechanism<T>, lambda: T, t: T) -> Result<(T, T)> {
    check_flow_args(lambda, t)?;
    let traj = solve(
        |_, y: &[T; 2]| {
            let v = y[0].max(T::zero());
            [-mech.eval(v), -mech.eval_prime(v) * y[1]]
        },
        T::zero(),
        [lambda, T::one()],
        t,
        &flow_options(),
    )?;
    let y = traj.last();
    Ok((y[0], y[1]))
}

/// `lim_{t→∞} u_t(λ)`, which is `Φ^{-1}(λ)` when Φ is eventually positive.
pub fn u_infinity<T: Real>(mech: &BranchingMechanism<T>, lambda: T) -> Result<Extended<T>> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(domain("lambda", lambda));
    }
    if !mech.h0() {
        return Ok(Extended::Infinite);
    }
    Ok(Extended::Finite(mech.phi_inverse(lambda)?))
}

/// `G(v) = ∫_v^∞ dλ/Φ(λ)` for `v > q`: the time the flow needs to descend
/// from infinity to `v`. Integrated in `log λ` in chunks until the local
/// power-law remainder is negligible.
pub fn descent_time<T: Real>(mech: &BranchingMechanism<T>, v: T) -> Result<T> {
    let f = |s: T| {
        let l = s.exp();
        l / mech.eval(l)
    };
    let opts = QuadOptions {
        abs_tol: T::zero(),
        rel_tol: tol(1e-13),
        max_intervals: 200,
    };
    let chunk = cst::<T>(4.0);
    let mut s = v.ln();
    let mut total = T::zero();
    let stop = tol::<T>(1e-15);
    for _ in 0..200 {
        let part = integrate(f, s, s + chunk, &opts);
        if !part.value.is_finite() {
            return Err(Error::Numerical(format!("descent integral diverged past log-lambda {s}")));
        }
        total = total + part.value;
        s = s + chunk;
        let l = s.exp();
        let phi = mech.eval(l);
        let slope = l * mech.eval_prime(l) / phi;
        if slope > cst(1.0 + 1e-3) {
            let rest = l / ((slope - T::one()) * phi);
            if rest <= stop * total {
                return Ok(total + rest);
            }
        }
        if !l.is_finite() || !phi.is_finite() {
            break;
        }
    }
    Err(Error::Undetermined("descent integral tail did not settle".into()))
}

/// `v̄_t = lim_{λ→∞} v_t(λ)`, infinite when Grey's condition fails.
///
/// Computed by inverting `t = ∫_{v̄_t}^∞ dλ/Φ(λ)`.
pub fn vbar<T: Real>(mech: &BranchingMechanism<T>, t: T) -> Result<Extended<T>> {
    if !(t > T::zero()) || !t.is_finite() {
        return Err(domain("t", t));
    }
    let report = mech.check_assumptions();
    match report.h2 {
        Verdict::Fails => return Ok(Extended::Infinite),
        Verdict::Undetermined => {
            return Err(Error::Undetermined("Grey's condition could not be decided".into()))
        }
        Verdict::Holds => {}
    }
    let q = report.largest_root_q.unwrap_or(T::zero());
    let g = |v: T| descent_time(mech, v);
    // bracket: G decreases from ∞ at q to 0 at ∞
    let mut hi = q + T::one();
    while g(hi)? > t {
        hi = q + (hi - q) * cst(4.0);
        if !hi.is_finite() {
            return Err(Error::Numerical("vbar bracket overflow".into()));
        }
    }
    let mut lo = q + (hi - q) / cst(4.0);
    while g(lo)? < t {
        let next = q + (lo - q) / cst(4.0);
        if next <= q {
            return Ok(Extended::Finite(lo));
        }
        lo = next;
    }
    let err = std::cell::Cell::new(None);
    let v = find_root(
        |v| match g(v) {
            Ok(x) => t - x,
            Err(e) => {
                err.set(Some(e.to_string()));
                T::nan()
            }
        },
        lo,
        hi,
    );
    if let Some(e) = err.take() {
        return Err(Error::Numerical(e));
    }
    Ok(Extended::Finite(v?))
}

/// `v̄_t` by flowing from large initial values `λ₀ ∈ {10^6, 10^8, 10^{10}}`
/// in log coordinates and extrapolating the three results.
pub fn vbar_by_flow<T: Real>(mech: &BranchingMechanism<T>, t: T) -> Result<Extended<T>> {
    if !(t > T::zero()) || !t.is_finite() {
        return Err(domain("t", t));
    }
    match mech.check_assumptions().h2 {
        Verdict::Fails => return Ok(Extended::Infinite),
        Verdict::Undetermined => {
            return Err(Error::Undetermined("Grey's condition could not be decided".into()))
        }
        Verdict::Holds => {}
    }
    let mut vals = [T::zero(); 3];
    for (i, l0) in [1e6, 1e8, 1e10].iter().enumerate() {
        let traj = solve(
            |_, y: &[T; 1]| {
                let v = y[0].exp();
                [-mech.eval(v) / v]
            },
            T::zero(),
            [cst::<T>(*l0).ln()],
            t,
            &flow_options(),
        )?;
        vals[i] = traj.last()[0].exp();
    }
    let d1 = vals[1] - vals[0];
    let d2 = vals[2] - vals[1];
    let denom = d2 - d1;
    // Aitken's Δ², only when the differences contract geometrically
    let est = if denom != T::zero() && d1 != T::zero() && (d2 / d1).abs() < cst(0.9) {
        vals[2] - d2 * d2 / denom
    } else {
        vals[2]
    };
    Ok(Extended::Finite(est))
}

/// `v̄` on a time grid.
#[derive(Clone, Debug, Serialize)]
pub struct ExtinctionCurve<T> {
    pub times: Vec<T>,
    pub values: Vec<Extended<T>>,
}

pub fn extinction_curve<T: Real>(mech: &BranchingMechanism<T>, times: &[T]) -> Result<ExtinctionCurve<T>> {
    let values = times.iter().map(|&t| vbar(mech, t)).collect::<Result<Vec<_>>>()?;
    Ok(ExtinctionCurve {
        times: times.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::LevyMeasure;

    fn stable() -> BranchingMechanism<f64> {
        BranchingMechanism::stable(1.5, 1.0).unwrap()
    }

    #[test]
    fn stable_v_flow_closed_form() {
        let v = v_at(&stable(), 4.0, 3.0).unwrap();
        assert!((v - 0.25).abs() < 1e-10);
    }

    #[test]
    fn zero_and_fixed_points() {
        assert_eq!(v_at(&stable(), 0.0, 5.0).unwrap(), 0.0);
        assert_eq!(u_at(&stable(), 0.0, 5.0).unwrap(), 0.0);
        let m = BranchingMechanism::<f64>::new(-1.0, 1.0, LevyMeasure::zero()).unwrap();
        assert!((v_at(&m, 1.0, 10.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn u_flow_increases_to_inverse() {
        let u = solve_u(&stable(), 1.0, 50.0).unwrap();
        let vals = u.values();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
        assert!((u.terminal() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn vbar_stable() {
        let two = vbar(&stable(), 2.0).unwrap().finite().unwrap();
        let four = vbar(&stable(), 4.0).unwrap().finite().unwrap();
        assert!((two - 1.0).abs() < 1e-10, "{two}");
        assert!((four - 0.25).abs() < 1e-10, "{four}");
        let by_flow = vbar_by_flow(&stable(), 2.0).unwrap().finite().unwrap();
        assert!((by_flow - 1.0).abs() < 1e-6, "{by_flow}");
    }

    #[test]
    fn vbar_infinite_without_grey() {
        let m = BranchingMechanism::<f64>::new(1.0, 0.0, LevyMeasure::<f64>::atoms(vec![(1.0, 1.0)]).unwrap()).unwrap();
        assert!(vbar(&m, 1.0).unwrap().is_infinite());
    }

    #[test]
    fn vbar_quadratic() {
        // Φ = λ + λ²: v̄_t = 1/(e^t - 1)
        let m = BranchingMechanism::<f64>::new(1.0, 1.0, LevyMeasure::zero()).unwrap();
        for &t in &[0.1, 1.0, 3.0] {
            let v = vbar(&m, t).unwrap().finite().unwrap();
            let want = 1.0 / (f64::exp(t) - 1.0);
            assert!((v - want).abs() < 1e-9 * want, "{t}: {v} vs {want}");
        }
    }

    #[test]
    fn derivative_of_stable_flow() {
        let (v, dv) = v_with_derivative(&stable(), 4.0, 3.0).unwrap();
        assert!((v - 0.25).abs() < 1e-10);
        // ∂v/∂λ = (v/λ)^{3/2}
        assert!((dv - (0.25f64 / 4.0).powf(1.5)).abs() < 1e-10);
    }

    #[test]
    fn u_infinity_markers() {
        assert!((u_infinity(&stable(), 8.0).unwrap().finite().unwrap() - 4.0).abs() < 1e-12);
        let bad = BranchingMechanism::<f64>::new(-0.5, 0.0, LevyMeasure::<f64>::exp_density(0.1, 10.0).unwrap()).unwrap();
        assert!(u_infinity(&bad, 1.0).unwrap().is_infinite());
    }

    #[test]
    fn forced_flow_reduces_to_u_and_v() {
        let m = stable();
        assert!((forced_flow_at(&m, 0.0, 4.0, 3.0).unwrap() - 0.25).abs() < 1e-10);
        let u = u_at(&m, 2.0, 1.5).unwrap();
        assert!((forced_flow_at(&m, 2.0, 0.0, 1.5).unwrap() - u).abs() < 1e-12);
    }
}
