//! Dormand–Prince 5(4) integration with a stored, interpolable trajectory.

use crate::error::{Error, Result};
use crate::real::{cst, tol, Real};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    /// Largest permitted step; `None` means a sixty-fourth of the span.
    pub h_max: Option<T>,
    pub max_steps: usize,
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        Self {
            rtol: tol(1e-10),
            atol: tol(1e-13),
            h_max: None,
            max_steps: 200_000,
        }
    }
}

/// Accepted nodes together with the right-hand side at each node.
#[derive(Clone, Debug)]
pub struct Trajectory<T, const N: usize> {
    pub t: Vec<T>,
    pub y: Vec<[T; N]>,
    pub dy: Vec<[T; N]>,
}

impl<T: Real, const N: usize> Trajectory<T, N> {
    pub fn t_start(&self) -> T {
        self.t[0]
    }

    pub fn t_end(&self) -> T {
        *self.t.last().unwrap()
    }

    pub fn last(&self) -> [T; N] {
        *self.y.last().unwrap()
    }

    /// Cubic Hermite interpolation between nodes. On a step where a component
    /// is monotone the interpolant is clamped to the endpoint values.
    pub fn eval(&self, t: T) -> [T; N] {
        let n = self.t.len();
        if n == 1 || t <= self.t[0] {
            return self.y[0];
        }
        if t >= self.t[n - 1] {
            return self.y[n - 1];
        }
        let i = match self.t.binary_search_by(|s| s.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.y[i],
            Err(i) => i - 1,
        };
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let two = cst::<T>(2.0);
        let three = cst::<T>(3.0);
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = -two * s3 + three * s2;
        let h11 = s3 - s2;
        let mut out = [T::zero(); N];
        for k in 0..N {
            let (a, b) = (self.y[i][k], self.y[i + 1][k]);
            let v = h00 * a + h10 * h * self.dy[i][k] + h01 * b + h11 * h * self.dy[i + 1][k];
            out[k] = v.max(a.min(b)).min(a.max(b));
        }
        out
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t0` to `t1 > t0`.
pub fn solve<T, const N: usize, F>(f: F, t0: T, y0: [T; N], t1: T, opts: &OdeOptions<T>) -> Result<Trajectory<T, N>>
where
    T: Real,
    F: Fn(T, &[T; N]) -> [T; N],
{
    solve_until(f, t0, y0, t1, opts, |_, _| false)
}

/// As [`solve`], stopping early after the first accepted step where `stop`
/// returns true.
pub fn solve_until<T, const N: usize, F, S>(
    f: F,
    t0: T,
    y0: [T; N],
    t1: T,
    opts: &OdeOptions<T>,
    stop: S,
) -> Result<Trajectory<T, N>>
where
    T: Real,
    F: Fn(T, &[T; N]) -> [T; N],
    S: Fn(T, &[T; N]) -> bool,
{
    if !(t1 >= t0) {
        return Err(Error::Numerical(format!("bad integration span [{t0}, {t1}]")));
    }
    let dy0 = f(t0, &y0);
    let mut traj = Trajectory {
        t: vec![t0],
        y: vec![y0],
        dy: vec![dy0],
    };
    if t1 == t0 {
        return Ok(traj);
    }
    let span = t1 - t0;
    let h_max = opts.h_max.unwrap_or(span / cst(64.0));
    let h_min = span * T::epsilon() * cst(16.0);
    let mut h = initial_step(&y0, &dy0, opts).min(h_max);
    let (mut t, mut y, mut k1) = (t0, y0, dy0);
    let mut steps = 0usize;
    while t < t1 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Numerical(format!("ODE step budget exhausted at t = {t}")));
        }
        if t + h > t1 {
            h = t1 - t;
        }
        let mut k = [[T::zero(); N]; 7];
        k[0] = k1;
        let mut ys = y;
        for s in 1..7 {
            for j in 0..N {
                let mut acc = T::zero();
                for (m, km) in k.iter().enumerate().take(s) {
                    acc = acc + cst::<T>(A[s][m]) * km[j];
                }
                ys[j] = y[j] + h * acc;
            }
            k[s] = f(t + cst::<T>(C[s]) * h, &ys);
        }
        // ys now holds the fifth-order solution (FSAL row)
        let mut err = T::zero();
        let mut finite = true;
        for j in 0..N {
            let mut e = T::zero();
            for s in 0..7 {
                e = e + cst::<T>(E[s]) * k[s][j];
            }
            let sc = opts.atol + opts.rtol * y[j].abs().max(ys[j].abs());
            let r = h * e / sc;
            if !r.is_finite() || !ys[j].is_finite() {
                finite = false;
            }
            err = err + r * r;
        }
        let err = if finite { (err / cst(N as f64)).sqrt() } else { T::infinity() };
        if err <= T::one() {
            t = if t1 - (t + h) <= h_min { t1 } else { t + h };
            y = ys;
            k1 = k[6];
            traj.t.push(t);
            traj.y.push(y);
            traj.dy.push(k1);
            if stop(t, &y) {
                break;
            }
        }
        let fac = if err == T::zero() {
            cst(5.0)
        } else if err.is_finite() {
            (cst::<T>(0.9) * err.powf(cst(-0.2))).min(cst(5.0)).max(cst(0.2))
        } else {
            cst(0.1)
        };
        h = (h * fac).min(h_max);
        if h < h_min {
            return Err(Error::Numerical(format!("ODE step size underflow at t = {t}")));
        }
    }
    Ok(traj)
}

fn initial_step<T: Real, const N: usize>(y: &[T; N], dy: &[T; N], opts: &OdeOptions<T>) -> T {
    let mut d0 = T::zero();
    let mut d1 = T::zero();
    for j in 0..N {
        let sc = opts.atol + opts.rtol * y[j].abs();
        d0 = d0 + (y[j] / sc).powi(2);
        d1 = d1 + (dy[j] / sc).powi(2);
    }
    if d0 < cst(1e-10) || d1 < cst(1e-10) {
        cst(1e-6)
    } else {
        cst::<T>(0.01) * (d0 / d1).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let tr = solve(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 5.0, &OdeOptions::default()).unwrap();
        assert!((tr.last()[0] - (-5.0f64).exp()).abs() < 1e-11);
        assert!((tr.eval(2.345)[0] - (-2.345f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn harmonic_oscillator() {
        let tr = solve(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], 10.0, &OdeOptions::default()).unwrap();
        let y = tr.last();
        assert!((y[0] - 10f64.sin()).abs() < 1e-8);
        assert!((y[1] - 10f64.cos()).abs() < 1e-8);
    }

    #[test]
    fn stop_condition_ends_early() {
        let tr =
            solve_until(|_, _y: &[f64; 1]| [1.0], 0.0, [0.0], 10.0, &OdeOptions::default(), |_, y| y[0] > 2.0).unwrap();
        assert!(tr.t_end() < 10.0 && tr.last()[0] > 2.0);
    }

    #[test]
    fn interpolant_is_clamped() {
        let tr = solve(|_, y: &[f64; 1]| [-50.0 * y[0]], 0.0, [1.0], 1.0, &OdeOptions::default()).unwrap();
        for i in 0..1000 {
            let v = tr.eval(i as f64 / 1000.0)[0];
            assert!(v >= 0.0 && v <= 1.0);
        }
    }
}
