//! Sample statistics used by the harness.

use serde::{Deserialize, Serialize};

/// Mean and standard error of the mean.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (m, 0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    (m, (ss / (n as f64 - 1.0) / n as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Effective sample size used for the p-value.
    pub n_eff: f64,
}

/// Asymptotic Kolmogorov tail `P[K > λ]`.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test between weighted samples.
/// Weights need not be normalised; effective sizes are `(Σw)²/Σw²`.
pub fn ks_weighted(a: &[(f64, f64)], b: &[(f64, f64)]) -> KsResult {
    let prep = |s: &[(f64, f64)]| {
        let mut v: Vec<(f64, f64)> = s.iter().copied().filter(|&(_, w)| w > 0.0).collect();
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        let tot: f64 = v.iter().map(|p| p.1).sum();
        let sq: f64 = v.iter().map(|p| p.1 * p.1).sum();
        (v, tot, tot * tot / sq)
    };
    let (a, ta, na) = prep(a);
    let (b, tb, nb) = prep(b);
    if a.is_empty() || b.is_empty() {
        return KsResult {
            statistic: 0.0,
            p_value: 1.0,
            n_eff: 0.0,
        };
    }
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb, mut d) = (0.0f64, 0.0f64, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].0.min(b[j].0);
        while i < a.len() && a[i].0 <= x {
            fa += a[i].1 / ta;
            i += 1;
        }
        while j < b.len() && b[j].0 <= x {
            fb += b[j].1 / tb;
            j += 1;
        }
        d = d.max((fa - fb).abs());
    }
    let ne = na * nb / (na + nb);
    let s = ne.sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_tail((s + 0.12 + 0.11 / s) * d),
        n_eff: ne,
    }
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let w = |s: &[f64]| s.iter().map(|&x| (x, 1.0)).collect::<Vec<_>>();
    ks_weighted(&w(a), &w(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kolmogorov_tail_values() {
        // P[K > 1.36] ≈ 0.049
        assert!((kolmogorov_tail(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_tail(1.0) - 0.2700).abs() < 1e-3);
    }

    #[test]
    fn same_and_shifted_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a: Vec<f64> = (0..2000).map(|_| rng.gen()).collect();
        let b: Vec<f64> = (0..2000).map(|_| rng.gen()).collect();
        let c: Vec<f64> = (0..2000).map(|_| rng.gen::<f64>() + 0.2).collect();
        assert!(ks_two_sample(&a, &b).p_value > 0.01);
        assert!(ks_two_sample(&a, &c).p_value < 1e-6);
        let (m, se) = mean_se(&a);
        assert!((m - 0.5).abs() < 4.0 * se);
    }
}
