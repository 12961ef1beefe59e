//! Jump-size sampling from restrictions of the Lévy measure.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::mechanism::{Boundary, LevyFamily, LevyMeasure};

/// Per-cutoff moments of the Lévy measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    /// `π[ε, ∞)`
    pub rate: f64,
    /// `∫_[ε,∞) z π(dz)`
    pub mean_above: f64,
    /// `∫_(0,ε) z² π(dz)`
    pub second_below: f64,
}

#[derive(Clone, Debug)]
enum Kind {
    None,
    /// Density `k z^{-1-γ}` on `(0, cap)`.
    Stable { gamma: f64, k: f64, cap: f64 },
    Exp { nu: f64, cap: f64, total: f64, mean: f64 },
    Atoms { loc: Vec<f64>, cum: Vec<f64>, cum_biased: Vec<f64> },
    Table { edges: Vec<f64>, dens: Vec<f64>, cum: Vec<f64>, cum_biased: Vec<f64> },
}

/// Samples jumps of `π` restricted to `[ε, ∞)` and of the size-biased
/// measure `z π(dz)` used for immigration.
#[derive(Clone, Debug)]
pub struct JumpSampler {
    kind: Kind,
}

impl JumpSampler {
    pub fn new(levy: &LevyMeasure<f64>) -> Result<Self> {
        let unsupported = |what: &str| Error::Precondition(format!("simulator does not support {what}"));
        let cap = levy.cutoff().map(|c| c.bound().0).unwrap_or(f64::INFINITY);
        let tilt = levy.tilt();
        let kind = match levy.family() {
            _ if levy.is_zero() => Kind::None,
            LevyFamily::Zero => Kind::None,
            LevyFamily::StablePower { gamma, c } => {
                if tilt != 0.0 {
                    return Err(unsupported("tilted stable measures"));
                }
                Kind::Stable {
                    gamma: *gamma,
                    k: LevyMeasure::stable_constant(*gamma, *c),
                    cap,
                }
            }
            LevyFamily::ExpDensity { mu, .. } => Kind::Exp {
                nu: mu + tilt,
                cap,
                total: levy.total_mass().unwrap_or(0.0),
                mean: levy.tail_mean(0.0, Boundary::Open),
            },
            LevyFamily::FiniteAtoms(_) => {
                let atoms = levy.atom_list();
                let mut cum = Vec::with_capacity(atoms.len());
                let mut cum_b = Vec::with_capacity(atoms.len());
                let (mut s, mut sb) = (0.0, 0.0);
                for &(x, m) in &atoms {
                    s += m;
                    sb += x * m;
                    cum.push(s);
                    cum_b.push(sb);
                }
                Kind::Atoms {
                    loc: atoms.iter().map(|a| a.0).collect(),
                    cum,
                    cum_biased: cum_b,
                }
            }
            LevyFamily::TabulatedDensity { theta, density } => {
                if tilt != 0.0 {
                    return Err(unsupported("tilted tabulated measures"));
                }
                let mut edges = Vec::new();
                let mut dens = Vec::new();
                for i in 0..theta.len() {
                    if theta[i] >= cap {
                        let w = (cap - theta[i - 1]) / (theta[i] - theta[i - 1]);
                        edges.push(cap);
                        dens.push(density[i - 1] + w * (density[i] - density[i - 1]));
                        break;
                    }
                    edges.push(theta[i]);
                    dens.push(density[i]);
                }
                let (mut cum, mut cum_b) = (vec![0.0], vec![0.0]);
                for i in 0..edges.len() - 1 {
                    let (a, b, da, db) = (edges[i], edges[i + 1], dens[i], dens[i + 1]);
                    let h = b - a;
                    cum.push(cum[i] + h * (da + db) / 2.0);
                    // ∫ z (da + (db-da)(z-a)/h) dz over [a, b]
                    let m = h * (da * (2.0 * a + b) + db * (a + 2.0 * b)) / 6.0;
                    cum_b.push(cum_b[i] + m);
                }
                Kind::Table {
                    edges,
                    dens,
                    cum,
                    cum_biased: cum_b,
                }
            }
        };
        Ok(Self { kind })
    }

    /// Whether small jumps have to be cut off (infinite activity).
    pub fn needs_cutoff(&self) -> bool {
        matches!(self.kind, Kind::Stable { .. })
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.kind, Kind::None)
    }

    /// Moments at cutoff `eps`; finite-activity measures ignore `eps`.
    pub fn moments(&self, eps: f64) -> Moments {
        match &self.kind {
            Kind::None => Moments {
                rate: 0.0,
                mean_above: 0.0,
                second_below: 0.0,
            },
            &Kind::Stable { gamma, k, cap } => {
                let e = eps.min(cap);
                let (tail, mean) = if cap.is_finite() {
                    (cap.powf(-gamma), cap.powf(1.0 - gamma))
                } else {
                    (0.0, 0.0)
                };
                Moments {
                    rate: k / gamma * (e.powf(-gamma) - tail),
                    mean_above: k / (gamma - 1.0) * (e.powf(1.0 - gamma) - mean),
                    second_below: k / (2.0 - gamma) * e.powf(2.0 - gamma),
                }
            }
            Kind::Exp { total, mean, .. } => Moments {
                rate: *total,
                mean_above: *mean,
                second_below: 0.0,
            },
            Kind::Atoms { cum, cum_biased, .. } => Moments {
                rate: *cum.last().unwrap(),
                mean_above: *cum_biased.last().unwrap(),
                second_below: 0.0,
            },
            Kind::Table { cum, cum_biased, .. } => Moments {
                rate: *cum.last().unwrap(),
                mean_above: *cum_biased.last().unwrap(),
                second_below: 0.0,
            },
        }
    }

    /// One jump size from `π` restricted to `[eps, ∞)`, normalised.
    pub fn sample<R: Rng + ?Sized>(&self, eps: f64, rng: &mut R) -> f64 {
        match &self.kind {
            Kind::None => 0.0,
            &Kind::Stable { gamma, cap, .. } => {
                let u: f64 = rng.gen();
                let drop = if cap.is_finite() { 1.0 - (eps / cap).powf(gamma) } else { 1.0 };
                eps * (1.0 - u * drop).powf(-1.0 / gamma)
            }
            &Kind::Exp { nu, cap, .. } => {
                let u: f64 = rng.gen();
                let scale = if cap.is_finite() { -(-nu * cap).exp_m1() } else { 1.0 };
                -(-u * scale).ln_1p() / nu
            }
            Kind::Atoms { loc, cum, .. } => pick(loc, cum, rng),
            Kind::Table { edges, dens, cum, .. } => table_sample(edges, dens, cum, rng),
        }
    }

    /// One jump size from `z π(dz)` restricted to `[eps, ∞)`, normalised.
    pub fn sample_biased<R: Rng + ?Sized>(&self, eps: f64, rng: &mut R) -> f64 {
        match &self.kind {
            Kind::None => 0.0,
            &Kind::Stable { gamma, cap, .. } => {
                let g1 = gamma - 1.0;
                let u: f64 = rng.gen();
                let drop = if cap.is_finite() { 1.0 - (eps / cap).powf(g1) } else { 1.0 };
                eps * (1.0 - u * drop).powf(-1.0 / g1)
            }
            &Kind::Exp { nu, cap, .. } => loop {
                // z e^{-νz} is Gamma(2, ν)
                let a: f64 = Exp1.sample(rng);
                let b: f64 = Exp1.sample(rng);
                let z = (a + b) / nu;
                if z <= cap {
                    break z;
                }
            },
            Kind::Atoms { loc, cum_biased, .. } => pick(loc, cum_biased, rng),
            Kind::Table { edges, dens, cum, .. } => loop {
                // propose from π, accept with probability z / z_max
                let z = table_sample(edges, dens, cum, rng);
                if rng.gen::<f64>() * edges.last().unwrap() <= z {
                    break z;
                }
            },
        }
    }
}

fn pick<R: Rng + ?Sized>(loc: &[f64], cum: &[f64], rng: &mut R) -> f64 {
    let u = rng.gen::<f64>() * cum.last().unwrap();
    let i = cum.partition_point(|&c| c <= u).min(loc.len() - 1);
    loc[i]
}

fn table_sample<R: Rng + ?Sized>(edges: &[f64], dens: &[f64], cum: &[f64], rng: &mut R) -> f64 {
    let total = *cum.last().unwrap();
    let u = rng.gen::<f64>() * total;
    let i = (cum.partition_point(|&c| c <= u).max(1) - 1).min(edges.len() - 2);
    let (a, b, da, db) = (edges[i], edges[i + 1], dens[i], dens[i + 1]);
    let h = b - a;
    let m = u - cum[i];
    // solve da·s + (db-da)s²/(2h) = m for s ∈ [0, h]
    let slope = (db - da) / h;
    let s = if slope.abs() < 1e-14 * (da.abs() + 1e-300) {
        m / da
    } else {
        let disc = (da * da + 2.0 * slope * m).max(0.0);
        2.0 * m / (da + disc.sqrt())
    };
    (a + s).clamp(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mean_of<F: FnMut(&mut ChaCha8Rng) -> f64>(n: usize, mut f: F) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        (0..n).map(|_| f(&mut rng)).sum::<f64>() / n as f64
    }

    #[test]
    fn stable_moments_match_measure() {
        let levy = LevyMeasure::stable(1.5, 1.0).unwrap();
        let s = JumpSampler::new(&levy).unwrap();
        let m = s.moments(0.1);
        assert!((m.rate - levy.tail(0.1, Boundary::Closed)).abs() < 1e-12);
        assert!((m.mean_above - levy.tail_mean(0.1, Boundary::Closed)).abs() < 1e-12);
        assert!((m.second_below - levy.second_moment_below(0.1)).abs() < 1e-12);
        // P[Z > 1] for Z ~ π|[0.1,∞) is (0.1)^{1.5}
        let p = mean_of(200_000, |r| (s.sample(0.1, r) > 1.0) as u8 as f64);
        assert!((p - 0.1f64.powf(1.5)).abs() < 4e-3);
    }

    #[test]
    fn exp_sampling_means() {
        let levy = LevyMeasure::exp_density(1.0, 2.0).unwrap();
        let s = JumpSampler::new(&levy).unwrap();
        assert!((mean_of(200_000, |r| s.sample(0.0, r)) - 0.5).abs() < 5e-3);
        // size-biased exponential has mean 2/μ
        assert!((mean_of(200_000, |r| s.sample_biased(0.0, r)) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn truncated_exp_stays_below_cap() {
        use crate::mechanism::Cutoff;
        let levy = LevyMeasure::exp_density(1.0, 1.0).unwrap().restricted(Cutoff::AtMost(0.5));
        let s = JumpSampler::new(&levy).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..10_000).all(|_| s.sample(0.0, &mut rng) <= 0.5 + 1e-12));
        assert!((s.moments(0.0).rate - levy.total_mass().unwrap()).abs() < 1e-14);
    }

    #[test]
    fn atom_and_table_sampling() {
        let levy = LevyMeasure::atoms(vec![(1.0, 1.0), (3.0, 1.0)]).unwrap();
        let s = JumpSampler::new(&levy).unwrap();
        assert!((mean_of(100_000, |r| s.sample(0.0, r)) - 2.0).abs() < 1e-2);
        // biased weights 1:3
        assert!((mean_of(100_000, |r| s.sample_biased(0.0, r)) - 2.5).abs() < 1e-2);
        let levy = LevyMeasure::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        let s = JumpSampler::new(&levy).unwrap();
        assert!((mean_of(100_000, |r| s.sample(0.0, r)) - 1.0).abs() < 1e-2);
        assert!((s.moments(0.0).mean_above - 1.0).abs() < 1e-14);
    }
}
