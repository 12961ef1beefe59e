//! Named validation experiments with their default mechanisms and sizes.

use serde::{Deserialize, Serialize};

use super::{
    convergence_experiment, convergence_from, conditioning_config, ks_weighted, law_check, sim_defaults,
    size_bias_report, weighted_target, ConvergenceReport, EventKind, Functional, Law, McReport, DEFAULT_BIAS,
};
use crate::error::{Error, Result};
use crate::mechanism::{BranchingMechanism, LevyMeasure};
use crate::simulate::{ensemble, Sampler, SimConfig, StopRule, Termination};

/// `α = 0, β = 1`, one atom of mass 1 at 1.
pub fn atoms_mech() -> BranchingMechanism<f64> {
    BranchingMechanism::new(0.0, 1.0, LevyMeasure::atoms(vec![(1.0, 1.0)]).unwrap()).unwrap()
}

/// `Φ(λ) = λ^{3/2}`.
pub fn stable_mech() -> BranchingMechanism<f64> {
    BranchingMechanism::stable(1.5, 1.0).unwrap()
}

/// `Φ(λ) = λ²`.
pub fn feller_mech() -> BranchingMechanism<f64> {
    BranchingMechanism::new(0.0, 1.0, LevyMeasure::zero()).unwrap()
}

/// `Φ(λ) = 2λ + λ²`, whose shift at `q = -1` is `λ²`.
pub fn feller_drift_mech() -> BranchingMechanism<f64> {
    BranchingMechanism::new(2.0, 1.0, LevyMeasure::zero()).unwrap()
}

/// `α = 1, β = 0`, Lévy density `e^{-θ}`.
pub fn se_mech() -> BranchingMechanism<f64> {
    BranchingMechanism::new(1.0, 0.0, LevyMeasure::exp_density(1.0, 1.0).unwrap()).unwrap()
}

pub struct Preset {
    pub name: &'static str,
    pub about: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset { name: "lmj-atoms", about: "local max-jump CDF, atom mechanism, t = 1, r = 0.5" },
    Preset { name: "gmj-atoms", about: "global max-jump CDF, atom mechanism, r = 0.5" },
    Preset { name: "jumps-atoms", about: "mean jump count on (0, 1], atom mechanism" },
    Preset { name: "width-atoms", about: "width tail bounds at r = 9, atom mechanism" },
    Preset { name: "width-feller", about: "P[sup X > 4] = 1/4 for Phi = lambda^2" },
    Preset { name: "height-stable", about: "P[H <= 2] = e^-1, stable 1.5" },
    Preset { name: "mass-stable", about: "E[exp(-8 sigma)] = e^-4, stable 1.5" },
    Preset { name: "mean-se", about: "E[X_1] = e^-1, exponential-density mechanism" },
    Preset { name: "gmjr-se", about: "global max-jump tail at r = 8 against its asymptote" },
    Preset { name: "cbi-stable", about: "size-biased process against weighted paths, stable 1.5" },
    Preset { name: "killed-se", about: "killed size-biased process, exponential-density mechanism" },
    Preset { name: "mjc-stable", about: "conditioning on a large max jump, stable 1.5" },
    Preset { name: "tmc-stable", about: "conditioning on a large total mass, stable 1.5" },
    Preset { name: "h-stable", about: "conditioning on a large height, stable 1.5" },
    Preset { name: "local-stable", about: "all three stable ladders on one ensemble" },
    Preset { name: "mjs-se", about: "large max jump, subcritical exponential-density mechanism" },
    Preset { name: "tms-feller", about: "large total mass for Phi = 2 lambda + lambda^2" },
];

/// Optional replacements for a preset's defaults.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub mech: Option<BranchingMechanism<f64>>,
    pub x: Option<f64>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub ladder: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub experiment: String,
    pub checks: Vec<McReport>,
    pub ladders: Vec<ConvergenceReport>,
}

impl ExperimentOutcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub const STABLE_JUMP_LADDER: &[f64] = &[1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0];
pub const STABLE_HEIGHT_LADDER: &[f64] = &[4.0, 6.0, 10.0, 20.0, 40.0, 80.0];
pub const STABLE_MASS_LADDER: &[f64] = &[1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0, 10000.0];

/// Fewest conditioned replicates for a rung to count as feasible.
pub const MIN_EVENTS: usize = 500;

/// Sample size per side for two-sample KS checks.
pub const KS_N: usize = 10_000;

struct Setup {
    mech: BranchingMechanism<f64>,
    x: f64,
    cfg: SimConfig,
}

fn setup(o: &Overrides, mech: BranchingMechanism<f64>, n: usize, dt: f64, seed: u64) -> Setup {
    let mech = o.mech.clone().unwrap_or(mech);
    let x = o.x.unwrap_or(1.0);
    let mut cfg = sim_defaults(&mech, x, o.dt.unwrap_or(dt));
    cfg.n = o.n.unwrap_or(n);
    cfg.seed = o.seed.unwrap_or(seed);
    Setup { mech, x, cfg }
}

fn law(name: &str, law: Law, s: Setup) -> Result<ExperimentOutcome> {
    let c = law_check(law, &s.mech, s.x, &s.cfg)?;
    Ok(ExperimentOutcome {
        experiment: name.into(),
        checks: vec![c.law, c.size_bias],
        ladders: Vec::new(),
    })
}

/// Checks for a ladder at its largest feasible rung: against the exact
/// finite-level value when one is known, and against the limit. The limit
/// comparison is only diagnostic when the exact value itself lies outside
/// the 3 s.e. band around the limit.
pub fn ladder_checks(rep: &ConvergenceReport) -> Vec<McReport> {
    let Some(rung) = rep.largest_feasible(MIN_EVENTS) else {
        let mut r = rep.rungs.first().cloned().expect("nonempty ladder");
        r.pass = false;
        r.warnings.push(format!("no rung has {MIN_EVENTS} conditioned replicates"));
        return vec![r];
    };
    let mut out = Vec::new();
    let mut lim = rung.clone();
    lim.name = format!("largest feasible rung vs limit: {}", rung.name);
    lim.pass = lim.within_3se();
    if !rep.monotone {
        lim.warnings.push("distance to the limit is not monotone along the ladder".into());
    }
    if let (Some(reference), Some(limit)) = (rung.reference, rep.target.value) {
        if (reference - limit).abs() > 3.0 * rung.std_error {
            lim.pass = true;
            lim.warnings.push(format!(
                "diagnostic only: the exact value {reference:.6} at this level is itself outside the band around the limit"
            ));
        }
        let mut exact = rung.clone().with_target(Some(reference), DEFAULT_BIAS);
        exact.reference = Some(reference);
        exact.name = format!("largest feasible rung vs exact value: {}", rung.name);
        out.push(exact);
    }
    out.insert(0, lim);
    out
}

fn ladder_outcome(name: &str, reps: Vec<ConvergenceReport>) -> ExperimentOutcome {
    let mut checks: Vec<McReport> = reps.iter().flat_map(ladder_checks).collect();
    checks.push(reps[0].size_bias.clone());
    ExperimentOutcome {
        experiment: name.into(),
        checks,
        ladders: reps,
    }
}

fn ladder_or(o: &Overrides, default: &[f64]) -> Vec<f64> {
    o.ladder.clone().unwrap_or_else(|| default.to_vec())
}

pub fn run_experiment(name: &str, o: &Overrides) -> Result<ExperimentOutcome> {
    let f4 = Functional::Laplace { lambda: 4.0 };
    match name {
        "lmj-atoms" => law(name, Law::LocalMaxJump { t: 1.0, r: 0.5 }, setup(o, atoms_mech(), 100_000, 1e-3, 11)),
        "gmj-atoms" => law(name, Law::GlobalMaxJump { r: 0.5 }, setup(o, atoms_mech(), 100_000, 1e-3, 12)),
        "jumps-atoms" => law(name, Law::JumpCount { t: 1.0 }, setup(o, atoms_mech(), 100_000, 1e-3, 13)),
        "width-atoms" => law(name, Law::Width { r: 9.0 }, setup(o, atoms_mech(), 100_000, 1e-3, 14)),
        "width-feller" => law(name, Law::Width { r: 4.0 }, setup(o, feller_mech(), 100_000, 1e-3, 15)),
        "height-stable" => law(name, Law::Height { t: 2.0 }, setup(o, stable_mech(), 100_000, 1e-2, 16)),
        "mass-stable" => law(name, Law::TotalMassLaplace { lambda: 8.0 }, setup(o, stable_mech(), 100_000, 1e-2, 17)),
        "mean-se" => law(name, Law::Mean { t: 1.0 }, se_setup(o, 100_000, 18)),
        "gmjr-se" => {
            let mut out = law(name, Law::GlobalTail { r: 8.0 }, se_setup(o, 1_000_000, 19))?;
            // the asymptote itself carries a relative tolerance
            let c = &mut out.checks[0];
            if let Some(a) = c.reference {
                let within = (c.estimate - a).abs() <= 0.15 * a;
                if !within {
                    c.pass = false;
                    c.warnings.push("estimate is more than 15% from the asymptote".into());
                }
            }
            Ok(out)
        }
        "cbi-stable" => cbi_stable(o),
        "killed-se" => killed_se(o),
        "mjc-stable" | "tmc-stable" | "h-stable" => {
            let kind = match name {
                "mjc-stable" => EventKind::MaxJump,
                "tmc-stable" => EventKind::TotalMass,
                _ => EventKind::Height,
            };
            let default = match kind {
                EventKind::MaxJump => STABLE_JUMP_LADDER,
                EventKind::TotalMass => STABLE_MASS_LADDER,
                _ => STABLE_HEIGHT_LADDER,
            };
            let s = setup(o, stable_mech(), 1_000_000, 2e-2, 20);
            let rep = convergence_experiment(kind, &s.mech, s.x, &f4, 3.0, &ladder_or(o, default), &s.cfg)?;
            Ok(ladder_outcome(name, vec![rep]))
        }
        "local-stable" => {
            let s = setup(o, stable_mech(), 1_000_000, 2e-2, 21);
            Ok(ladder_outcome(name, local_stable(&s.mech, s.x, &s.cfg, o.ladder.as_deref())?))
        }
        "mjs-se" => {
            let s = se_setup(o, 200_000, 22);
            let f = Functional::Laplace { lambda: 1.0 };
            let ladder = ladder_or(o, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
            let rep = convergence_experiment(EventKind::MaxJump, &s.mech, s.x, &f, 1.0, &ladder, &s.cfg)?;
            Ok(ladder_outcome(name, vec![rep]))
        }
        "tms-feller" => {
            let s = setup(o, feller_drift_mech(), 200_000, 1e-3, 23);
            let f = Functional::Laplace { lambda: 1.0 };
            let ladder = ladder_or(o, &[0.5, 1.0, 2.0, 3.0, 4.0]);
            let rep = convergence_experiment(EventKind::TotalMass, &s.mech, s.x, &f, 1.0, &ladder, &s.cfg)?;
            let shift = shifted_measure_check(&s, &f, 0.5)?;
            let mut out = ladder_outcome(name, vec![rep]);
            out.checks.insert(0, shift);
            Ok(out)
        }
        _ => Err(Error::Config(format!("unknown experiment '{name}'"))),
    }
}

/// `E[e^{qx - qX_t - Φ(q)σ_t} X_t F(X_t)] / x` from unconditioned paths
/// against the size-biased value under the shifted critical mechanism. The
/// weight has a finite second moment only for `t < π/4` here.
fn shifted_measure_check(s: &Setup, f: &Functional, t: f64) -> Result<McReport> {
    let (q, shifted) = super::stable_reduction(&s.mech)
        .ok_or_else(|| Error::Precondition("no critical shift for this mechanism".into()))?;
    // Φ(q) = -Φ_q(-q), and -q > 0 lies in the domain of Φ_q
    let phi_q = -shifted.phi(-q)?;
    let cfg = SimConfig {
        horizon: t,
        record_times: vec![t],
        stop: StopRule::default(),
        seed: s.cfg.seed.wrapping_add(1),
        ..s.cfg.clone()
    };
    let stats = ensemble(Sampler::Path, &s.mech, s.x, &cfg)?;
    let vals: Vec<f64> = stats
        .iter()
        .map(|p| {
            let (y, sig) = (p.x_at[0], p.sigma_at[0]);
            (q * s.x - q * y - phi_q * sig).exp() * y * f.eval(y) / s.x
        })
        .collect();
    let (m, se) = super::mean_se(&vals);
    Ok(McReport::new(format!("shifted-measure weighted {} at t = {t}", f.label()), m, se, vals.len(), vals.len())
        .with_target(super::size_biased_value(&shifted, s.x, f, t)?, DEFAULT_BIAS))
}

fn se_setup(o: &Overrides, n: usize, seed: u64) -> Setup {
    let mut s = setup(o, se_mech(), n, 1e-2, seed);
    // without Grey's condition paths only decay, so stop them once negligible
    s.cfg.x_min = Some(1e-4 * s.x);
    s
}

/// Max-jump, height and total-mass ladders for `E[e^{-4X_3} | ·]` from one
/// shared ensemble. A custom `ladder` applies to all three.
pub fn local_stable(
    mech: &BranchingMechanism<f64>,
    x: f64,
    cfg: &SimConfig,
    ladder: Option<&[f64]>,
) -> Result<Vec<ConvergenceReport>> {
    let f = Functional::Laplace { lambda: 4.0 };
    let t = 3.0;
    let pick = |default: &[f64]| ladder.map_or_else(|| default.to_vec(), |l| l.to_vec());
    let heights: Vec<f64> = pick(STABLE_HEIGHT_LADDER).into_iter().filter(|&r| r > t).collect();
    let ladders = [
        (EventKind::MaxJump, pick(STABLE_JUMP_LADDER)),
        (EventKind::Height, heights),
        (EventKind::TotalMass, pick(STABLE_MASS_LADDER)),
    ];
    let events: Vec<_> = ladders
        .iter()
        .flat_map(|(k, l)| l.iter().map(move |&r| k.at(r)))
        .collect();
    let c = conditioning_config(&events, t, cfg)?;
    let stats = ensemble(Sampler::Path, mech, x, &c)?;
    ladders
        .iter()
        .map(|(k, l)| convergence_from(&stats, *k, l, mech, x, &f, t))
        .collect()
}

fn cbi_stable(o: &Overrides) -> Result<ExperimentOutcome> {
    let s = setup(o, stable_mech(), 100_000, 1e-2, 24);
    let (t, f) = (3.0, Functional::Laplace { lambda: 4.0 });
    let (weighted, stats) = weighted_target(&f, t, &s.mech, s.x, &s.cfg)?;
    let cfg = SimConfig {
        horizon: t,
        record_times: vec![t],
        stop: StopRule::default(),
        seed: s.cfg.seed.wrapping_add(1),
        ..s.cfg.clone()
    };
    let star = ensemble(Sampler::CbiStar, &s.mech, s.x, &cfg)?;
    let xs: Vec<f64> = star.iter().map(|p| p.x_at[0]).collect();
    let vals: Vec<f64> = xs.iter().map(|&v| f.eval(v)).collect();
    let (m, se) = super::mean_se(&vals);
    let mut direct = McReport::new(format!("E[exp(-4 X*_{t})]"), m, se, star.len(), star.len())
        .with_target(weighted.target, DEFAULT_BIAS);
    direct.unresolved = star.iter().filter(|p| p.cause == Termination::Blowup).count();

    // The weights have infinite variance here, so instead of a KS test the
    // CDFs are compared pointwise with the exact normalisation, each point
    // having finite variance. The worst grid point is reported.
    let scale = (s.mech.alpha() * t).exp() / s.x;
    let cdf_grid = [0.1, 0.3, 1.0, 3.0, 10.0];
    let mut worst: Option<McReport> = None;
    for &y in &cdf_grid {
        let fw: Vec<f64> = stats.iter().map(|p| p.x_at[0]).map(|v| if v <= y { scale * v } else { 0.0 }).collect();
        let fs: Vec<f64> = xs.iter().map(|&v| if v <= y { 1.0 } else { 0.0 }).collect();
        let ((mw, sw), (ms, ss)) = (super::mean_se(&fw), super::mean_se(&fs));
        let mut r = McReport::new(format!("weighted CDF of X_{t} vs CDF of X*_{t} at {y}"), mw, sw.hypot(ss), fw.len(), fs.len())
            .with_target(Some(ms), DEFAULT_BIAS);
        r.reference = Some(ms);
        let key = |r: &McReport| r.z.map_or(0.0, f64::abs);
        if worst.as_ref().map_or(true, |w| key(&r) > key(w)) {
            worst = Some(r);
        }
    }
    let cdf_rep = worst.expect("nonempty grid");

    // X* dominates X: its CDF lies below at every grid point
    let grid = [0.1, 0.3, 1.0, 3.0, 10.0];
    let cdf = |v: &[f64], y: f64| v.iter().filter(|&&u| u <= y).count() as f64 / v.len() as f64;
    let plain: Vec<f64> = stats.iter().map(|p| p.x_at[0]).collect();
    let gap = grid.iter().map(|&y| cdf(&xs, y) - cdf(&plain, y)).fold(f64::MIN, f64::max);
    let se_gap = (0.25 / xs.len() as f64 + 0.25 / plain.len() as f64).sqrt();
    let dom = McReport::new("max CDF excess of X* over X".into(), gap, se_gap, plain.len(), xs.len())
        .with_bounds(f64::MIN, 0.0, 0.0);

    let sb = size_bias_report(&stats, 0, t, s.mech.alpha(), s.x);
    Ok(ExperimentOutcome {
        experiment: "cbi-stable".into(),
        checks: vec![weighted, direct, cdf_rep, dom, sb],
        ladders: Vec::new(),
    })
}

fn killed_se(o: &Overrides) -> Result<ExperimentOutcome> {
    let s = se_setup(o, 10_000, 25);
    let t = 1.0;
    let cfg = SimConfig {
        horizon: t,
        record_times: vec![t],
        stop: StopRule::default(),
        ..s.cfg.clone()
    };
    let killed = ensemble(Sampler::KilledStar, &s.mech, s.x, &cfg)?;
    let n = killed.len();
    let k = killed.iter().filter(|p| p.cause == Termination::Killed).count();
    let p = k as f64 / n as f64;
    let target = -(-s.mech.alpha() * t).exp_m1();
    let kill = McReport::new(format!("P[killed by {t}]"), p, (p * (1.0 - p) / n as f64).sqrt(), n, n)
        .with_target(Some(target), 0.0);

    let star = ensemble(Sampler::CbiStar, &s.mech, s.x, &SimConfig { seed: cfg.seed.wrapping_add(1), ..cfg.clone() })?;
    let alive: Vec<(f64, f64)> = killed
        .iter()
        .filter(|p| p.cause != Termination::Killed)
        .take(KS_N)
        .map(|p| (p.x_at[0], 1.0))
        .collect();
    let full: Vec<(f64, f64)> = star.iter().take(KS_N).map(|p| (p.x_at[0], 1.0)).collect();
    let ks = ks_weighted(&alive, &full);
    let ks_rep = McReport::new("KS p-value, surviving X_* vs X*".into(), ks.p_value, 0.0, alive.len(), full.len())
        .with_bounds(0.01, 1.0, 0.0);

    let paths = ensemble(Sampler::Path, &s.mech, s.x, &SimConfig { seed: cfg.seed.wrapping_add(2), ..cfg })?;
    let sb = size_bias_report(&paths, 0, t, s.mech.alpha(), s.x);
    let weighted: Vec<(f64, f64)> = paths.iter().take(KS_N).map(|p| (p.x_at[0], p.x_at[0])).collect();
    let ks = ks_weighted(&weighted, &full);
    let ks_w = McReport::new("KS p-value, weighted X vs X*".into(), ks.p_value, 0.0, weighted.len(), full.len())
        .with_bounds(0.01, 1.0, 0.0);
    Ok(ExperimentOutcome {
        experiment: "killed-se".into(),
        checks: vec![kill, ks_rep, ks_w, sb],
        ladders: Vec::new(),
    })
}
