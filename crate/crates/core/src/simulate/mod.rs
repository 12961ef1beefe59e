//! Euler scheme for CB paths with Poisson jump counts, plus the size-biased
//! (CBI) and killed variants.
//!
//! Jumps at least `ε` are simulated and compensated; smaller jumps are dropped
//! or, with `diffusion_correction`, replaced by extra Gaussian variance.
//! Simulation is f64 only.

mod jumps;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::BranchingMechanism;

pub use jumps::{JumpSampler, Moments};

/// Small-jump cutoff: fixed, or proportional to the current mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum SmallJumps {
    Absolute(f64),
    Relative(f64),
}

/// Stop rules, checked once `t >= not_before`. By default any set rule stops
/// the path; with `all` every set rule must have fired.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub jump_above: Option<f64>,
    pub width_above: Option<f64>,
    pub mass_above: Option<f64>,
    pub not_before: f64,
    #[serde(default)]
    pub all: bool,
}

impl StopRule {
    fn is_empty(&self) -> bool {
        self.jump_above.is_none() && self.width_above.is_none() && self.mass_above.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub cutoff: SmallJumps,
    pub diffusion_correction: bool,
    /// Extinction threshold; `None` means `1e-10·x`.
    pub x_min: Option<f64>,
    pub seed: u64,
    pub n: usize,
    /// Times at which `X`, the running max jump, σ and jump counts are recorded.
    pub record_times: Vec<f64>,
    pub stop: StopRule,
    /// Step is `dt·(X/x)^step_power`, capped at `max_step`. Zero gives fixed steps.
    pub step_power: f64,
    pub max_step: Option<f64>,
    /// Replicates whose mass exceeds this are aborted as blown up.
    pub blowup: f64,
    pub record_path: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 1.0,
            cutoff: SmallJumps::Absolute(1e-4),
            diffusion_correction: false,
            x_min: None,
            seed: 0x5eed,
            n: 1000,
            record_times: Vec::new(),
            stop: StopRule::default(),
            step_power: 0.0,
            max_step: None,
            blowup: 1e12,
            record_path: false,
        }
    }
}

impl SimConfig {
    /// Scale-free settings for a stable mechanism of index `gamma`.
    pub fn self_similar(gamma: f64, dt: f64, factor: f64) -> Self {
        Self {
            dt,
            cutoff: SmallJumps::Relative(factor),
            diffusion_correction: true,
            step_power: gamma - 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.horizon > 0.0) {
            return bad("horizon must be positive");
        }
        match self.cutoff {
            SmallJumps::Absolute(e) | SmallJumps::Relative(e) if !(e > 0.0 && e.is_finite()) => {
                return bad("small-jump cutoff must be positive");
            }
            _ => {}
        }
        if let Some(m) = self.x_min {
            if !(m >= 0.0) {
                return bad("x_min must be nonnegative");
            }
        }
        if self.record_times.iter().any(|&t| !(t > 0.0 && t <= self.horizon)) {
            return bad("record times must lie in (0, horizon]");
        }
        if !self.stop.is_empty() && self.record_times.iter().any(|&t| t > self.stop.not_before) {
            return bad("stop rules must not fire before the last record time");
        }
        if !(self.step_power >= 0.0) || self.max_step.is_some_and(|m| !(m > 0.0)) {
            return bad("step_power must be nonnegative and max_step positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Extinct,
    Horizon,
    Killed,
    Stopped,
    Blowup,
}

/// Summary of one replicate. Values at record times after killing or a
/// blow-up are `+∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathStats {
    pub x_at: Vec<f64>,
    pub sup_jump_at: Vec<f64>,
    pub sigma_at: Vec<f64>,
    pub jumps_at: Vec<u64>,
    /// Largest jump over the simulated span.
    pub sup_jump: f64,
    pub height: Option<f64>,
    pub width: f64,
    pub sigma: f64,
    pub jumps: u64,
    pub terminal: f64,
    pub end_time: f64,
    pub cause: Termination,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    /// Grid and values, filled when `record_path` is set.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `(time, size)` of simulated jumps, filled when `record_path` is set.
    pub jumps: Vec<(f64, f64)>,
    pub stats: PathStats,
}

impl SamplePath {
    pub fn cause(&self) -> Termination {
        self.stats.cause
    }
}

/// Which process to sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    Path,
    CbiStar,
    KilledStar,
}

/// Per-replicate stream derived from `(seed, index)`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

struct Stepper<'a> {
    mech: &'a BranchingMechanism<f64>,
    jumps: JumpSampler,
    cfg: &'a SimConfig,
    x0: f64,
    immigration: bool,
    kill_at: f64,
}

pub fn sample_path<R: Rng + ?Sized>(
    mech: &BranchingMechanism<f64>,
    x: f64,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<SamplePath> {
    stepper(mech, x, cfg, false)?.run(rng, f64::INFINITY)
}

/// Size-biased process: CB dynamics plus immigration with mechanism `Φ' − α`.
pub fn sample_cbi_star<R: Rng + ?Sized>(
    mech: &BranchingMechanism<f64>,
    x: f64,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<SamplePath> {
    if mech.alpha() < 0.0 {
        return Err(Error::Precondition("size-biased process needs alpha >= 0".into()));
    }
    stepper(mech, x, cfg, true)?.run(rng, f64::INFINITY)
}

/// The size-biased process killed at an independent exponential time of rate `α`.
pub fn sample_killed_star<R: Rng + ?Sized>(
    mech: &BranchingMechanism<f64>,
    x: f64,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<SamplePath> {
    if !(mech.alpha() > 0.0) {
        return Err(Error::Precondition("killed process needs alpha > 0".into()));
    }
    let kill: f64 = Exp::new(mech.alpha()).expect("positive rate").sample(rng);
    stepper(mech, x, cfg, true)?.run(rng, kill)
}

fn stepper<'a>(mech: &'a BranchingMechanism<f64>, x: f64, cfg: &'a SimConfig, immigration: bool) -> Result<Stepper<'a>> {
    cfg.validate()?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(crate::error::domain("initial mass", x));
    }
    Ok(Stepper {
        mech,
        jumps: JumpSampler::new(mech.levy())?,
        cfg,
        x0: x,
        immigration,
        kill_at: f64::INFINITY,
    })
}

/// Runs `n` replicates of `sampler` in parallel; replicate `i` uses `stream(seed, i)`.
pub fn ensemble(sampler: Sampler, mech: &BranchingMechanism<f64>, x: f64, cfg: &SimConfig) -> Result<Vec<PathStats>> {
    Ok(ensemble_paths(sampler, mech, x, cfg)?.into_iter().map(|p| p.stats).collect())
}

pub fn ensemble_paths(
    sampler: Sampler,
    mech: &BranchingMechanism<f64>,
    x: f64,
    cfg: &SimConfig,
) -> Result<Vec<SamplePath>> {
    // fail fast on bad input rather than once per replicate
    stepper(mech, x, cfg, false)?;
    (0..cfg.n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed, i);
            match sampler {
                Sampler::Path => sample_path(mech, x, cfg, &mut rng),
                Sampler::CbiStar => sample_cbi_star(mech, x, cfg, &mut rng),
                Sampler::KilledStar => sample_killed_star(mech, x, cfg, &mut rng),
            }
        })
        .collect()
}

impl Stepper<'_> {
    fn cutoff(&self, x: f64) -> f64 {
        if !self.jumps.needs_cutoff() {
            return 0.0;
        }
        match self.cfg.cutoff {
            SmallJumps::Absolute(e) => e,
            SmallJumps::Relative(f) => f * x,
        }
    }

    fn step(&self, x: f64) -> f64 {
        let mut h = self.cfg.dt;
        if self.cfg.step_power > 0.0 {
            h *= (x / self.x0).powf(self.cfg.step_power);
        }
        match self.cfg.max_step {
            Some(m) => h.min(m),
            None => h,
        }
    }

    fn run<R: Rng + ?Sized>(mut self, rng: &mut R, kill_at: f64) -> Result<SamplePath> {
        self.kill_at = kill_at;
        let cfg = self.cfg;
        let (alpha, beta) = (self.mech.alpha(), self.mech.beta());
        let x_min = cfg.x_min.unwrap_or(1e-10 * self.x0);
        let floor = x_min.max(1e-300);
        let m = cfg.record_times.len();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| cfg.record_times[a].total_cmp(&cfg.record_times[b]));

        let mut st = PathStats {
            x_at: vec![f64::NAN; m],
            sup_jump_at: vec![0.0; m],
            sigma_at: vec![0.0; m],
            jumps_at: vec![0; m],
            sup_jump: 0.0,
            height: None,
            width: self.x0,
            sigma: 0.0,
            jumps: 0,
            terminal: self.x0,
            end_time: 0.0,
            cause: Termination::Horizon,
        };
        let mut path = SamplePath {
            times: Vec::new(),
            values: Vec::new(),
            jumps: Vec::new(),
            stats: st.clone(),
        };
        if cfg.record_path {
            path.times.push(0.0);
            path.values.push(self.x0);
        }

        let (mut t, mut x) = (0.0f64, self.x0);
        let mut next = 0usize;
        let end = cfg.horizon.min(self.kill_at);
        let cause = loop {
            if !self.immigration && x <= x_min {
                x = 0.0;
                st.height = Some(t);
                break Termination::Extinct;
            }
            if t >= end {
                break if self.kill_at <= cfg.horizon { Termination::Killed } else { Termination::Horizon };
            }
            let mut h = self.step(x.max(floor)).min(end - t);
            if next < m {
                h = h.min(cfg.record_times[order[next]] - t);
            }
            let landing = h >= end - t;

            let eps = self.cutoff(x);
            let mom = self.jumps.moments(eps);
            let b_eff = beta + if cfg.diffusion_correction { 0.5 * mom.second_below } else { 0.0 };
            // the linear drift is integrated exactly so that E[X_t] has no step bias
            let mut drift = x * (-alpha * h).exp_m1() - mom.mean_above * x * h;
            let mut imm_rate = 0.0;
            let mut imm_eps = 0.0;
            if self.immigration {
                imm_eps = self.cutoff(x.max(self.x0 * 1e-6).max(floor));
                let im = self.jumps.moments(imm_eps);
                drift += (2.0 * beta + im.second_below) * h;
                imm_rate = im.mean_above;
            }
            let z: f64 = rng.sample(StandardNormal);
            let mut y = (x + drift + (2.0 * b_eff * x * h).sqrt() * z).max(0.0);

            let mut count = 0u64;
            let lam = x * mom.rate * h;
            if lam > 0.0 {
                count = poisson(lam, rng);
            }
            for _ in 0..count {
                let size = self.jumps.sample(eps, rng);
                y += size;
                st.sup_jump = st.sup_jump.max(size);
                if cfg.record_path {
                    path.jumps.push((t + h, size));
                }
            }
            st.jumps += count;
            if imm_rate > 0.0 {
                for _ in 0..poisson(imm_rate * h, rng) {
                    y += self.jumps.sample_biased(imm_eps, rng);
                }
            }

            st.sigma += 0.5 * (x + y) * h;
            t = if landing { end } else { t + h };
            x = y;
            st.width = st.width.max(x);
            if cfg.record_path {
                path.times.push(t);
                path.values.push(x);
            }
            if !x.is_finite() || x > cfg.blowup {
                break Termination::Blowup;
            }
            while next < m && cfg.record_times[order[next]] <= t {
                let k = order[next];
                st.x_at[k] = x;
                st.sup_jump_at[k] = st.sup_jump;
                st.sigma_at[k] = st.sigma;
                st.jumps_at[k] = st.jumps;
                next += 1;
            }
            if t >= cfg.stop.not_before && self.stopped(&st) {
                break Termination::Stopped;
            }
        };

        st.end_time = t;
        st.terminal = x;
        // unreached record times
        for &k in &order[next..] {
            st.x_at[k] = match cause {
                Termination::Extinct => 0.0,
                Termination::Killed | Termination::Blowup => f64::INFINITY,
                _ => f64::NAN,
            };
            st.sup_jump_at[k] = st.sup_jump;
            st.sigma_at[k] = st.sigma;
            st.jumps_at[k] = st.jumps;
        }
        if cause == Termination::Killed {
            st.terminal = f64::INFINITY;
        }
        st.cause = cause;
        path.stats = st;
        Ok(path)
    }

    fn stopped(&self, st: &PathStats) -> bool {
        let s = &self.cfg.stop;
        let fired = [
            s.jump_above.map(|r| st.sup_jump > r),
            s.width_above.map(|r| st.width > r),
            s.mass_above.map(|r| st.sigma > r),
        ];
        let mut set = fired.iter().flatten();
        if s.all {
            set.all(|&f| f) && !s.is_empty()
        } else {
            set.any(|&f| f)
        }
    }
}

fn poisson<R: Rng + ?Sized>(lam: f64, rng: &mut R) -> u64 {
    if lam < 30.0 {
        // inversion is cheaper than building a sampler for small means
        let mut u: f64 = rng.gen();
        let mut p = (-lam).exp();
        let mut k = 0u64;
        while u > p {
            u -= p;
            k += 1;
            p *= lam / k as f64;
            if p == 0.0 {
                break;
            }
        }
        k
    } else {
        Poisson::new(lam).expect("finite positive mean").sample(rng) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::LevyMeasure;

    fn atoms() -> BranchingMechanism<f64> {
        BranchingMechanism::new(0.0, 1.0, LevyMeasure::atoms(vec![(1.0, 1.0)]).unwrap()).unwrap()
    }

    fn mean_se(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    }

    #[test]
    fn mean_decays_at_rate_alpha() {
        let mech = BranchingMechanism::new(1.0, 0.5, LevyMeasure::exp_density(1.0, 1.0).unwrap()).unwrap();
        let cfg = SimConfig {
            dt: 1e-2,
            n: 20_000,
            record_times: vec![1.0],
            ..SimConfig::default()
        };
        let xs: Vec<f64> = ensemble(Sampler::Path, &mech, 1.0, &cfg).unwrap().iter().map(|s| s.x_at[0]).collect();
        let (m, se) = mean_se(&xs);
        assert!((m - (-1.0f64).exp()).abs() < 3.5 * se, "{m} ± {se}");
    }

    #[test]
    fn jump_counts_match_intensity() {
        let cfg = SimConfig {
            dt: 1e-2,
            n: 20_000,
            record_times: vec![1.0],
            ..SimConfig::default()
        };
        let counts: Vec<f64> = ensemble(Sampler::Path, &atoms(), 1.0, &cfg)
            .unwrap()
            .iter()
            .map(|s| s.jumps_at[0] as f64)
            .collect();
        let (m, se) = mean_se(&counts);
        assert!((m - 1.0).abs() < 3.5 * se, "{m} ± {se}");
    }

    #[test]
    fn degenerate_mechanism_is_constant() {
        let mech = BranchingMechanism::new_unchecked(0.0, 0.0, LevyMeasure::zero());
        let cfg = SimConfig {
            record_path: true,
            horizon: 0.1,
            ..SimConfig::default()
        };
        let p = sample_path(&mech, 2.5, &cfg, &mut stream(1, 0)).unwrap();
        assert!(p.values.iter().all(|&v| v == 2.5));
        assert_eq!(p.cause(), Termination::Horizon);
        assert!((p.stats.sigma - 0.25).abs() < 1e-12);
    }

    #[test]
    fn deterministic_and_nonnegative() {
        let cfg = SimConfig {
            n: 50,
            horizon: 2.0,
            record_times: vec![0.5, 2.0],
            ..SimConfig::default()
        };
        let a = ensemble(Sampler::Path, &atoms(), 1.0, &cfg).unwrap();
        let b = ensemble(Sampler::Path, &atoms(), 1.0, &cfg).unwrap();
        assert_eq!(a, b);
        for s in &a {
            assert!(s.x_at.iter().all(|&v| v >= 0.0));
            assert!(s.sup_jump_at[0] <= s.sup_jump_at[1]);
            if let Some(h) = s.height {
                assert!(h > 0.0 && s.terminal == 0.0);
            }
        }
        let empty = SimConfig { n: 0, ..cfg };
        assert!(ensemble(Sampler::Path, &atoms(), 1.0, &empty).unwrap().is_empty());
    }

    #[test]
    fn preconditions() {
        let sup = BranchingMechanism::new(-1.0, 1.0, LevyMeasure::zero()).unwrap();
        let cfg = SimConfig::default();
        assert!(sample_cbi_star(&sup, 1.0, &cfg, &mut stream(0, 0)).is_err());
        assert!(sample_killed_star(&atoms(), 1.0, &cfg, &mut stream(0, 0)).is_err());
        let bad = SimConfig { dt: 0.0, ..SimConfig::default() };
        assert!(sample_path(&atoms(), 1.0, &bad, &mut stream(0, 0)).is_err());
    }

    #[test]
    fn killing_probability() {
        let mech = BranchingMechanism::new(1.0, 1.0, LevyMeasure::zero()).unwrap();
        let cfg = SimConfig {
            dt: 1e-2,
            n: 20_000,
            ..SimConfig::default()
        };
        let k = ensemble(Sampler::KilledStar, &mech, 1.0, &cfg)
            .unwrap()
            .iter()
            .filter(|s| s.cause == Termination::Killed)
            .count() as f64
            / 20_000.0;
        let p = 1.0 - (-1.0f64).exp();
        assert!((k - p).abs() < 3.0 * (p * (1.0 - p) / 20_000.0).sqrt());
    }
}
