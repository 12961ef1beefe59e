//! Monte Carlo checks of the analytic laws and of the local-convergence
//! limits under large maximal jump, width, total mass and height.

pub mod experiments;
pub mod stats;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplace::{forced_flow_at, v_at, v_with_derivative, vbar};
use crate::maxjump::{
    global_max_jump_cdf, height_cdf, local_max_jump_cdf, tail_asymptote, total_mass_laplace, width_tail,
    JumpLawQuery, Window,
};
use crate::mechanism::{BranchingMechanism, Criticality, LevyFamily, Region, Verdict};
use crate::simulate::{ensemble, PathStats, Sampler, SimConfig, SmallJumps, StopRule, Termination};
use crate::Extended;

pub use stats::{ks_two_sample, ks_weighted, mean_se, KsResult};

/// Relative allowance for discretisation bias applied on top of the 3σ band.
pub const DEFAULT_BIAS: f64 = 0.05;

/// Conditioning event with its level `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "r", rename_all = "snake_case")]
pub enum Conditioning {
    MaxJumpExceeds(f64),
    WidthExceeds(f64),
    TotalMassExceeds(f64),
    HeightExceeds(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    MaxJump,
    Width,
    TotalMass,
    Height,
}

impl EventKind {
    pub fn at(self, r: f64) -> Conditioning {
        match self {
            EventKind::MaxJump => Conditioning::MaxJumpExceeds(r),
            EventKind::Width => Conditioning::WidthExceeds(r),
            EventKind::TotalMass => Conditioning::TotalMassExceeds(r),
            EventKind::Height => Conditioning::HeightExceeds(r),
        }
    }
}

impl Conditioning {
    pub fn kind(&self) -> EventKind {
        match self {
            Conditioning::MaxJumpExceeds(_) => EventKind::MaxJump,
            Conditioning::WidthExceeds(_) => EventKind::Width,
            Conditioning::TotalMassExceeds(_) => EventKind::TotalMass,
            Conditioning::HeightExceeds(_) => EventKind::Height,
        }
    }

    pub fn level(&self) -> f64 {
        match *self {
            Conditioning::MaxJumpExceeds(r)
            | Conditioning::WidthExceeds(r)
            | Conditioning::TotalMassExceeds(r)
            | Conditioning::HeightExceeds(r) => r,
        }
    }

    /// Whether the event happened on a simulated path; `None` if the path
    /// ended before it was decided.
    pub fn event(&self, s: &PathStats) -> Option<bool> {
        let extinct = s.cause == Termination::Extinct;
        let seen = match *self {
            Conditioning::MaxJumpExceeds(r) => s.sup_jump > r,
            Conditioning::WidthExceeds(r) => s.width > r,
            Conditioning::TotalMassExceeds(r) => s.sigma > r,
            Conditioning::HeightExceeds(r) => match s.height {
                Some(h) => h > r,
                None => s.end_time > r,
            },
        };
        if seen {
            Some(true)
        } else if extinct {
            Some(false)
        } else {
            None
        }
    }

    fn label(&self) -> String {
        let r = self.level();
        match self.kind() {
            EventKind::MaxJump => format!("sup jump > {r}"),
            EventKind::Width => format!("width > {r}"),
            EventKind::TotalMass => format!("sigma > {r}"),
            EventKind::Height => format!("H > {r}"),
        }
    }
}

/// Bounded functional of `X_t`. A killed state (`X_t = ∞`) maps to the
/// functional's value at infinity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    One,
    Laplace { lambda: f64 },
    /// `1{X_t ≤ level}`.
    Indicator { level: f64 },
    /// `Σ c_k min(X_t, cap)^k`.
    Polynomial { coeffs: Vec<f64>, cap: f64 },
}

impl Functional {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Functional::One => 1.0,
            Functional::Laplace { lambda } => {
                if x.is_infinite() {
                    0.0
                } else {
                    (-lambda * x).exp()
                }
            }
            Functional::Indicator { level } => (x <= *level) as u8 as f64,
            Functional::Polynomial { coeffs, cap } => {
                let y = x.min(*cap);
                coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c)
            }
        }
    }

    fn label(&self) -> String {
        match self {
            Functional::One => "1".into(),
            Functional::Laplace { lambda } => format!("exp(-{lambda} X)"),
            Functional::Indicator { level } => format!("1{{X <= {level}}}"),
            Functional::Polynomial { cap, .. } => format!("poly(min(X, {cap}))"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditioningSpec {
    pub event: Conditioning,
    pub functional: Functional,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub target: Option<f64>,
    /// Admissible interval, for checks against bounds rather than a value.
    pub bounds: Option<(f64, f64)>,
    /// Exact value at the finite conditioning level, when known.
    pub reference: Option<f64>,
    pub z: Option<f64>,
    pub bias_allowance: f64,
    pub pass: bool,
    pub replicates: usize,
    /// Size of the conditioned subset (or of the sample for plain laws).
    pub events: usize,
    /// Replicates whose event was still undecided when simulation stopped.
    pub unresolved: usize,
    pub warnings: Vec<String>,
}

impl McReport {
    fn new(name: String, estimate: f64, std_error: f64, replicates: usize, events: usize) -> Self {
        Self {
            name,
            estimate,
            std_error,
            target: None,
            bounds: None,
            reference: None,
            z: None,
            bias_allowance: DEFAULT_BIAS,
            pass: true,
            replicates,
            events,
            unresolved: 0,
            warnings: Vec::new(),
        }
    }

    /// Sets the target and recomputes `z` and `pass`.
    pub fn with_target(mut self, target: Option<f64>, bias: f64) -> Self {
        self.target = target;
        self.bias_allowance = bias;
        self.grade();
        self
    }

    pub fn with_bounds(mut self, lo: f64, hi: f64, bias: f64) -> Self {
        self.bounds = Some((lo, hi));
        self.bias_allowance = bias;
        self.grade();
        self
    }

    /// Half-width of the acceptance band around `target`.
    pub fn band(&self) -> Option<f64> {
        self.target.map(|t| 3.0 * self.std_error + self.bias_allowance * t.abs())
    }

    fn grade(&mut self) {
        let (e, se, b) = (self.estimate, self.std_error, self.bias_allowance);
        self.z = self.target.map(|t| {
            let d = e - t;
            if d == 0.0 {
                0.0
            } else if se > 0.0 {
                d / se
            } else {
                d.signum() * f64::MAX
            }
        });
        self.pass = match (self.target, self.bounds) {
            (Some(t), _) => (e - t).abs() <= 3.0 * se + b * t.abs(),
            (None, Some((lo, hi))) => e >= lo * (1.0 - b) - 3.0 * se && e <= hi * (1.0 + b) + 3.0 * se,
            (None, None) => true,
        };
    }

    /// Whether the estimate lies within 3 s.e. of the target, ignoring the bias allowance.
    pub fn within_3se(&self) -> bool {
        self.z.is_some_and(|z| z.abs() <= 3.0)
    }

    fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }
}

fn bernoulli(name: String, hits: usize, n: usize) -> McReport {
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / (n as f64 - 1.0).max(1.0)).sqrt();
    McReport::new(name, p, se, n, n)
}

/// Ratio estimator `Σ F 1_event / Σ 1_event` with its delta-method error.
pub fn conditional_report(
    stats: &[PathStats],
    t_index: usize,
    event: Conditioning,
    functional: &Functional,
) -> Result<McReport> {
    let mut values = Vec::new();
    let mut unresolved = 0;
    for s in stats {
        match event.event(s) {
            Some(true) => values.push(functional.eval(s.x_at[t_index])),
            Some(false) => {}
            None => unresolved += 1,
        }
    }
    let m = values.len();
    if m < 2 {
        return Err(Error::InsufficientConditioning {
            events: m,
            effective: m as f64,
        });
    }
    let est = values.iter().sum::<f64>() / m as f64;
    let ss: f64 = values.iter().map(|v| (v - est) * (v - est)).sum();
    let se = (ss / (m as f64 * (m as f64 - 1.0))).sqrt();
    let mut rep = McReport::new(
        format!("E[{} | {}]", functional.label(), event.label()),
        est,
        se,
        stats.len(),
        m,
    );
    rep.unresolved = unresolved;
    if unresolved > 0 {
        rep.warn(format!("{unresolved} replicates ended before the event was decided; counted as non-events"));
    }
    Ok(rep)
}

/// Sample mean of the size-biasing weights `e^{αt} X_t / x`, which must be 1.
pub fn size_bias_report(stats: &[PathStats], t_index: usize, t: f64, alpha: f64, x: f64) -> McReport {
    let scale = (alpha * t).exp() / x;
    let w: Vec<f64> = stats.iter().map(|s| scale * s.x_at[t_index]).filter(|w| w.is_finite()).collect();
    let (m, se) = mean_se(&w);
    let mut rep = McReport::new(format!("mean of e^(alpha t) X_t / x at t = {t}"), m, se, stats.len(), w.len());
    rep = rep.with_target(Some(1.0), 0.0);
    if w.len() < stats.len() {
        rep.warn(format!("{} blown-up replicates excluded", stats.len() - w.len()));
    }
    rep
}

/// `(1/x) E_x[e^{αt} X_t F(X_t)]` in closed form where available.
pub fn size_biased_value(mech: &BranchingMechanism<f64>, x: f64, f: &Functional, t: f64) -> Result<Option<f64>> {
    Ok(match f {
        Functional::One => Some(1.0),
        Functional::Laplace { lambda } => {
            let (v, dv) = v_with_derivative(mech, *lambda, t)?;
            Some((mech.alpha() * t).exp() * dv * (-x * v).exp())
        }
        _ => None,
    })
}

/// Mechanism with its critical-stable reduction `Φ_q = cλ^γ` for some `q < 0`.
pub fn stable_reduction(mech: &BranchingMechanism<f64>) -> Option<(f64, BranchingMechanism<f64>)> {
    let levy = mech.levy();
    let q = if levy.is_zero() && mech.beta() > 0.0 && mech.alpha() > 0.0 {
        -mech.alpha() / (2.0 * mech.beta())
    } else if let (LevyFamily::StablePower { .. }, true) = (levy.family(), mech.beta() == 0.0) {
        if levy.tilt() > 0.0 && levy.cutoff().is_none() {
            -levy.tilt()
        } else {
            return None;
        }
    } else {
        return None;
    };
    let shifted = mech.shift(q).ok()?;
    (shifted.alpha().abs() < 1e-9 * (1.0 + mech.alpha().abs())).then_some((q, shifted))
}

/// Limit of `E_x[F(X_t) | event]` as the level grows, with the hypotheses
/// that were found not to hold listed as warnings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitTarget {
    pub value: Option<f64>,
    pub form: String,
    pub warnings: Vec<String>,
}

pub fn limit_target(
    kind: EventKind,
    mech: &BranchingMechanism<f64>,
    x: f64,
    f: &Functional,
    t: f64,
) -> Result<LimitTarget> {
    let mut warnings = Vec::new();
    let crit = mech.classify();
    let alpha = mech.alpha();
    let levy = mech.levy();
    let unbounded = levy.sup_support().is_none();
    let size_biased = |w: &mut Vec<String>| -> Result<(Option<f64>, String)> {
        let v = size_biased_value(mech, x, f, t)?;
        if v.is_none() {
            w.push("no closed form for this functional".into());
        }
        Ok((v, "(1/x) E[e^(alpha t) X_t F]".into()))
    };
    let (value, form) = match kind {
        EventKind::Height => {
            if mech.check_assumptions().h2 != Verdict::Holds {
                warnings.push("height limit needs Grey's condition".into());
            }
            if crit == Criticality::Supercritical {
                warnings.push("height limit is for (sub)critical mechanisms".into());
            }
            size_biased(&mut warnings)?
        }
        EventKind::MaxJump => {
            if !unbounded {
                warnings.push("max-jump limit needs a Levy measure of unbounded support".into());
            }
            match crit {
                Criticality::Critical => size_biased(&mut warnings)?,
                Criticality::Subcritical => {
                    if !matches!(f, Functional::Laplace { .. }) {
                        warnings.push("subcritical max-jump limit is stated for F e^(-lambda X_t)".into());
                    }
                    let v = size_biased_value(mech, x, f, t)?.map(|v| v * (-alpha * t).exp());
                    (v, "(1/x) E[X_t F]".into())
                }
                Criticality::Supercritical => {
                    warnings.push("no limit for supercritical mechanisms".into());
                    (None, "none".into())
                }
            }
        }
        EventKind::Width => {
            if unbounded {
                warnings.push("width limit is shown for Levy measures of bounded support".into());
            }
            if crit != Criticality::Critical {
                warnings.push("width limit is for critical mechanisms".into());
            }
            size_biased(&mut warnings)?
        }
        EventKind::TotalMass => match crit {
            Criticality::Critical => {
                let stable = mech.beta() == 0.0
                    && matches!(levy.family(), LevyFamily::StablePower { .. })
                    && levy.tilt() == 0.0
                    && levy.cutoff().is_none();
                let brownian = levy.is_zero() && mech.beta() > 0.0;
                if !(stable || brownian) {
                    warnings.push("total-mass limit is shown for stable mechanisms".into());
                }
                size_biased(&mut warnings)?
            }
            _ => match stable_reduction(mech) {
                Some((q, shifted)) => {
                    warnings.push(format!(
                        "limit taken through the critical shift at q = {q}; the stated hypothesis alpha < 0 is read as alpha > 0"
                    ));
                    let v = size_biased_value(&shifted, x, f, t)?;
                    (v, "(1/x) E[X_t F e^(qx - qX_t - Phi(q) sigma_t)]".into())
                }
                None => {
                    warnings.push("no critical stable shift exists for this mechanism".into());
                    (None, "none".into())
                }
            },
        },
    };
    Ok(LimitTarget { value, form, warnings })
}

/// Exact `E_x[F(X_t) | event]` at level `r`, for Laplace functionals under
/// large global maximal jump or large height.
pub fn prelimit_value(
    event: Conditioning,
    mech: &BranchingMechanism<f64>,
    x: f64,
    f: &Functional,
    t: f64,
) -> Result<Option<f64>> {
    let lambda = match f {
        Functional::One => return Ok(Some(1.0)),
        Functional::Laplace { lambda } => *lambda,
        _ => return Ok(None),
    };
    let uncond = (-x * v_at(mech, lambda, t)?).exp();
    match event {
        Conditioning::MaxJumpExceeds(r) => {
            if mech.classify() == Criticality::Supercritical || !mech.h0() {
                return Ok(None);
            }
            let q = JumpLawQuery::new(mech, x, Window::Infinite, r);
            let cdf = global_max_jump_cdf(&q)?;
            if cdf >= 1.0 {
                return Ok(None);
            }
            let region = Region::OpenTail(r);
            let n_r = -cdf.ln() / x;
            let trunc = mech.truncate(region)?;
            let w = forced_flow_at(&trunc, mech.region_mass(region), lambda + n_r, t)?;
            Ok(Some((uncond - (-x * w).exp()) / (1.0 - cdf)))
        }
        Conditioning::HeightExceeds(r) if r > t => {
            let (tail, rest) = match (vbar(mech, r)?, vbar(mech, r - t)?) {
                (Extended::Finite(a), Extended::Finite(b)) => (-(-x * a).exp_m1(), b),
                _ => return Ok(None),
            };
            let joint = uncond - (-x * v_at(mech, lambda + rest, t)?).exp();
            Ok(Some(joint / tail))
        }
        _ => Ok(None),
    }
}

/// Smallest horizon with `P_x[H <= T] >= 0.999`, or an exponential-decay
/// substitute when Grey's condition fails.
pub fn global_horizon(mech: &BranchingMechanism<f64>, x: f64, cap: f64) -> Result<f64> {
    if mech.check_assumptions().h2 == Verdict::Holds {
        let mut t = 1.0;
        while height_cdf(mech, x, t)? < 0.999 {
            t *= 1.25;
            if t > cap {
                return Ok(cap);
            }
        }
        return Ok(t);
    }
    if mech.alpha() > 0.0 {
        // X reaches 1e-10 x on the scale of its mean
        return Ok((23.0 / mech.alpha()).min(cap));
    }
    Ok(cap)
}

/// Sensible simulation defaults for `mech`: scale-free steps and a relative
/// cutoff for stable measures, fixed steps otherwise.
pub fn sim_defaults(mech: &BranchingMechanism<f64>, x: f64, dt: f64) -> SimConfig {
    match mech.levy().family() {
        LevyFamily::StablePower { gamma, .. } if !mech.levy().is_zero() && mech.beta() == 0.0 => SimConfig {
            x_min: Some(1e-6 * x),
            ..SimConfig::self_similar(*gamma, dt, 0.05)
        },
        _ => SimConfig {
            dt,
            cutoff: SmallJumps::Absolute(1e-4),
            ..SimConfig::default()
        },
    }
}

/// `E_x[F | event]` from a fresh ensemble, with the limit and finite-level targets.
pub fn estimate_conditional(
    spec: &ConditioningSpec,
    mech: &BranchingMechanism<f64>,
    x: f64,
    cfg: &SimConfig,
) -> Result<McReport> {
    let cfg = conditioning_config(&[spec.event], spec.t, cfg)?;
    let stats = ensemble(Sampler::Path, mech, x, &cfg)?;
    let mut rep = conditional_report(&stats, 0, spec.event, &spec.functional)?;
    let lim = limit_target(spec.event.kind(), mech, x, &spec.functional, spec.t)?;
    rep.reference = prelimit_value(spec.event, mech, x, &spec.functional, spec.t)?;
    rep = rep.with_target(lim.value, DEFAULT_BIAS);
    rep.warnings.extend(lim.warnings);
    Ok(rep)
}

/// Configuration that simulates until every event in `events` is decided.
pub fn conditioning_config(
    events: &[Conditioning],
    t: f64,
    base: &SimConfig,
) -> Result<SimConfig> {
    let top = |k: EventKind| {
        events
            .iter()
            .filter(|e| e.kind() == k)
            .map(|e| e.level())
            .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))))
    };
    let height = top(EventKind::Height).unwrap_or(0.0);
    // the all-of stop ends most paths long before this
    let horizon = base.horizon.max(1e3).max(height * 1.0001).max(t);
    Ok(SimConfig {
        horizon,
        record_times: vec![t],
        stop: StopRule {
            jump_above: top(EventKind::MaxJump),
            width_above: top(EventKind::Width),
            mass_above: top(EventKind::TotalMass),
            not_before: t.max(height * 1.0001),
            all: true,
        },
        ..base.clone()
    })
}

/// One rung per level; `monotone` says whether the distance to the target
/// shrinks along the ladder up to 2 s.e. of noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub kind: EventKind,
    pub target: LimitTarget,
    pub rungs: Vec<McReport>,
    pub distances: Vec<Option<f64>>,
    pub monotone: bool,
    /// Whether the exact finite-level references approach the target monotonically.
    pub reference_monotone: Option<bool>,
    pub size_bias: McReport,
}

impl ConvergenceReport {
    /// Last rung with at least `min_events` conditioned replicates.
    pub fn largest_feasible(&self, min_events: usize) -> Option<&McReport> {
        self.rungs.iter().rev().find(|r| r.events >= min_events)
    }
}

/// Builds a convergence report from an existing ensemble.
pub fn convergence_from(
    stats: &[PathStats],
    kind: EventKind,
    ladder: &[f64],
    mech: &BranchingMechanism<f64>,
    x: f64,
    f: &Functional,
    t: f64,
) -> Result<ConvergenceReport> {
    let target = limit_target(kind, mech, x, f, t)?;
    let mut rungs = Vec::new();
    for &r in ladder {
        let ev = kind.at(r);
        let mut rep = match conditional_report(stats, 0, ev, f) {
            Ok(rep) => rep,
            Err(Error::InsufficientConditioning { events, .. }) => {
                let mut rep = McReport::new(format!("E[{} | {}]", f.label(), ev.label()), 0.0, 0.0, stats.len(), events);
                rep.pass = false;
                rep.warn("insufficient conditioning mass");
                rungs.push(rep);
                continue;
            }
            Err(e) => return Err(e),
        };
        rep.reference = prelimit_value(ev, mech, x, f, t)?;
        rep = rep.with_target(target.value, 0.0);
        rungs.push(rep);
    }
    let distances: Vec<Option<f64>> = rungs
        .iter()
        .map(|r| target.value.map(|v| (r.estimate - v).abs()))
        .collect();
    let live: Vec<(f64, f64)> = rungs
        .iter()
        .zip(&distances)
        .filter(|(r, _)| r.events >= 2)
        .filter_map(|(r, d)| d.map(|d| (d, r.std_error)))
        .collect();
    let monotone = target.value.is_some() && live.windows(2).all(|w| w[1].0 <= w[0].0 + 2.0 * w[1].1);
    let reference_monotone = match (target.value, rungs.iter().map(|r| r.reference).collect::<Option<Vec<f64>>>()) {
        (Some(v), Some(refs)) => Some(refs.windows(2).all(|w| (w[1] - v).abs() <= (w[0] - v).abs() + 1e-12)),
        _ => None,
    };
    let size_bias = size_bias_report(stats, 0, t, mech.alpha(), x);
    Ok(ConvergenceReport {
        kind,
        target,
        rungs,
        distances,
        monotone,
        reference_monotone,
        size_bias,
    })
}

/// Runs one ensemble and reports the conditioned estimates along `ladder`.
pub fn convergence_experiment(
    kind: EventKind,
    mech: &BranchingMechanism<f64>,
    x: f64,
    f: &Functional,
    t: f64,
    ladder: &[f64],
    base: &SimConfig,
) -> Result<ConvergenceReport> {
    let events: Vec<Conditioning> = ladder.iter().map(|&r| kind.at(r)).collect();
    let cfg = conditioning_config(&events, t, base)?;
    let stats = ensemble(Sampler::Path, mech, x, &cfg)?;
    convergence_from(&stats, kind, ladder, mech, x, f, t)
}

/// Importance-weighted estimate of `(1/x) E_x[e^{αt} X_t F]` from an
/// unconditioned ensemble.
pub fn weighted_target(
    f: &Functional,
    t: f64,
    mech: &BranchingMechanism<f64>,
    x: f64,
    base: &SimConfig,
) -> Result<(McReport, Vec<PathStats>)> {
    let cfg = SimConfig {
        horizon: t,
        record_times: vec![t],
        stop: StopRule::default(),
        ..base.clone()
    };
    let stats = ensemble(Sampler::Path, mech, x, &cfg)?;
    let scale = (mech.alpha() * t).exp() / x;
    let vals: Vec<f64> = stats
        .iter()
        .map(|s| s.x_at[0])
        .filter(|v| v.is_finite())
        .map(|v| scale * v * f.eval(v))
        .collect();
    let (m, se) = mean_se(&vals);
    let rep = McReport::new(format!("(1/x) E[e^(alpha t) X_t {}] at t = {t}", f.label()), m, se, stats.len(), vals.len())
        .with_target(size_biased_value(mech, x, f, t)?, 0.0);
    Ok((rep, stats))
}

/// A named analytic law to compare against simulation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Law {
    /// `P[sup_{(0,t]} ΔX ≤ r]`
    LocalMaxJump { t: f64, r: f64 },
    /// `P[sup ΔX ≤ r]`
    GlobalMaxJump { r: f64 },
    /// `P[sup ΔX > r]`, with the large-`r` asymptote as reference.
    GlobalTail { r: f64 },
    /// `P[H ≤ t]`
    Height { t: f64 },
    /// `E[e^{-λσ}]`
    TotalMassLaplace { lambda: f64 },
    /// `P[sup X > r]`
    Width { r: f64 },
    /// Mean number of jumps on `(0, t]`.
    JumpCount { t: f64 },
    /// `E[X_t]`
    Mean { t: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawCheck {
    pub law: McReport,
    pub size_bias: McReport,
}

/// Empirical value of `law` with a 3σ band plus the bias allowance.
pub fn law_check(law: Law, mech: &BranchingMechanism<f64>, x: f64, base: &SimConfig) -> Result<LawCheck> {
    let global = || global_horizon(mech, x, base.horizon.max(1e3));
    let (horizon, t_rec, stop) = match law {
        Law::LocalMaxJump { t, .. } | Law::JumpCount { t } | Law::Mean { t } | Law::Height { t } => {
            (t, t, StopRule::default())
        }
        Law::GlobalMaxJump { r } | Law::GlobalTail { r } => {
            let t = 1.0;
            (global()?.max(t), t, StopRule { jump_above: Some(r), not_before: t, ..StopRule::default() })
        }
        Law::TotalMassLaplace { lambda } => {
            let t = 1.0;
            let stop = StopRule { mass_above: Some(40.0 / lambda), not_before: t, ..StopRule::default() };
            (global()?.max(t), t, stop)
        }
        Law::Width { r } => {
            let t = 1.0;
            (global()?.max(t), t, StopRule { width_above: Some(r), not_before: t, ..StopRule::default() })
        }
    };
    let cfg = SimConfig {
        horizon,
        record_times: vec![t_rec],
        stop,
        ..base.clone()
    };
    let stats = ensemble(Sampler::Path, mech, x, &cfg)?;
    let n = stats.len();
    if n < 2 {
        return Err(Error::Config("law checks need at least two replicates".into()));
    }
    let undecided = stats.iter().filter(|s| matches!(s.cause, Termination::Horizon | Termination::Blowup)).count();
    let mut rep = match law {
        Law::LocalMaxJump { t, r } => {
            let hits = stats.iter().filter(|s| s.sup_jump_at[0] <= r).count();
            let q = JumpLawQuery::new(mech, x, Window::Finite(t), r);
            bernoulli(format!("P[sup jump on (0,{t}] <= {r}]"), hits, n)
                .with_target(Some(local_max_jump_cdf(&q)?), DEFAULT_BIAS)
        }
        Law::GlobalMaxJump { r } => {
            let hits = stats.iter().filter(|s| s.sup_jump <= r).count();
            let q = JumpLawQuery::new(mech, x, Window::Infinite, r);
            let mut rep = bernoulli(format!("P[sup jump <= {r}]"), hits, n)
                .with_target(Some(global_max_jump_cdf(&q)?), DEFAULT_BIAS);
            rep.unresolved = stats.iter().filter(|s| s.cause == Termination::Horizon && s.sup_jump <= r).count();
            rep
        }
        Law::GlobalTail { r } => {
            let hits = stats.iter().filter(|s| s.sup_jump > r).count();
            let q = JumpLawQuery::new(mech, x, Window::Infinite, r);
            let mut rep = bernoulli(format!("P[sup jump > {r}]"), hits, n)
                .with_target(Some(1.0 - global_max_jump_cdf(&q)?), DEFAULT_BIAS);
            rep.reference = tail_asymptote(&q)?.value();
            rep.unresolved = stats.iter().filter(|s| s.cause == Termination::Horizon && s.sup_jump <= r).count();
            rep
        }
        Law::Height { t } => {
            let hits = stats.iter().filter(|s| s.height.is_some_and(|h| h <= t)).count();
            bernoulli(format!("P[H <= {t}]"), hits, n).with_target(Some(height_cdf(mech, x, t)?), DEFAULT_BIAS)
        }
        Law::TotalMassLaplace { lambda } => {
            let v: Vec<f64> = stats.iter().map(|s| (-lambda * s.sigma).exp()).collect();
            let (m, se) = mean_se(&v);
            let mut rep = McReport::new(format!("E[exp(-{lambda} sigma)]"), m, se, n, n)
                .with_target(Some(total_mass_laplace(mech, x, lambda)?), DEFAULT_BIAS);
            rep.unresolved = stats.iter().filter(|s| s.cause == Termination::Horizon).count();
            rep
        }
        Law::Width { r } => {
            let hits = stats.iter().filter(|s| s.width > r).count();
            let w = width_tail(mech, x, r)?;
            let base = bernoulli(format!("P[sup X > {r}]"), hits, n);
            let mut rep = match (w.exact, w.lower, w.upper) {
                (Some(e), _, _) => base.with_target(Some(e), DEFAULT_BIAS),
                (None, Some(lo), Some(hi)) => base.with_bounds(lo, hi, 0.0),
                (None, None, Some(hi)) => base.with_bounds(0.0, hi, 0.0),
                _ => base,
            };
            rep.reference = w.asymptote;
            rep.unresolved = stats.iter().filter(|s| s.cause == Termination::Horizon && s.width <= r).count();
            rep
        }
        Law::JumpCount { t } => {
            let total = mech.levy().total_mass().ok_or_else(|| {
                Error::Precondition("jump counts need a finite Levy measure".into())
            })?;
            let v: Vec<f64> = stats.iter().map(|s| s.jumps_at[0] as f64).collect();
            let (m, se) = mean_se(&v);
            let target = x * total * crate::maxjump::discounted_time(mech.alpha(), t);
            McReport::new(format!("mean jump count on (0,{t}]"), m, se, n, n).with_target(Some(target), 0.0)
        }
        Law::Mean { t } => {
            let v: Vec<f64> = stats.iter().map(|s| s.x_at[0]).filter(|v| v.is_finite()).collect();
            let (m, se) = mean_se(&v);
            McReport::new(format!("E[X_{t}]"), m, se, n, v.len()).with_target(Some(x * (-mech.alpha() * t).exp()), 0.0)
        }
    };
    if rep.unresolved > 0 {
        let u = rep.unresolved;
        rep.warn(format!("{u} replicates reached the horizon undecided"));
    } else if undecided > 0 && matches!(law, Law::TotalMassLaplace { .. }) {
        rep.warn(format!("{undecided} replicates reached the horizon"));
    }
    let size_bias = size_bias_report(&stats, 0, t_rec, mech.alpha(), x);
    Ok(LawCheck { law: rep, size_bias })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::LevyMeasure;

    fn stable() -> BranchingMechanism<f64> {
        BranchingMechanism::stable(1.5, 1.0).unwrap()
    }

    #[test]
    fn stable_limit_target() {
        let f = Functional::Laplace { lambda: 4.0 };
        let lim = limit_target(EventKind::MaxJump, &stable(), 1.0, &f, 3.0).unwrap();
        let want = (0.25f64 / 4.0).powf(1.5) * (-0.25f64).exp();
        assert!((lim.value.unwrap() - want).abs() < 1e-10);
        assert!(lim.warnings.is_empty());
    }

    #[test]
    fn prelimit_approaches_limit() {
        let f = Functional::Laplace { lambda: 4.0 };
        let m = stable();
        let lim = size_biased_value(&m, 1.0, &f, 3.0).unwrap().unwrap();
        let a = prelimit_value(Conditioning::MaxJumpExceeds(20.0), &m, 1.0, &f, 3.0).unwrap().unwrap();
        let b = prelimit_value(Conditioning::MaxJumpExceeds(200.0), &m, 1.0, &f, 3.0).unwrap().unwrap();
        assert!((a - 0.012288).abs() < 2e-5, "{a}");
        assert!((b - 0.012175).abs() < 2e-5, "{b}");
        assert!((b - lim).abs() < (a - lim).abs());
        // height converges like (r / (r - t))^2 since v̄_s = 4/s²
        let h = prelimit_value(Conditioning::HeightExceeds(200.0), &m, 1.0, &f, 3.0).unwrap().unwrap();
        assert!((h / lim - (200.0f64 / 197.0).powi(2)).abs() < 1e-3, "{h}");
    }

    #[test]
    fn feller_shift_reduction() {
        let m = BranchingMechanism::new(2.0, 1.0, LevyMeasure::zero()).unwrap();
        let (q, shifted) = stable_reduction(&m).unwrap();
        assert!((q + 1.0).abs() < 1e-15);
        assert!(shifted.alpha().abs() < 1e-12 && (shifted.beta() - 1.0).abs() < 1e-15);
        let f = Functional::Laplace { lambda: 1.0 };
        let lim = limit_target(EventKind::TotalMass, &m, 1.0, &f, 1.0).unwrap();
        // v_t(λ) = λ/(1+λt) for Φ = λ²
        let (v, dv) = (0.5, 0.25);
        assert!((lim.value.unwrap() - dv * (-v as f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn one_gives_exactly_one() {
        let cfg = SimConfig {
            n: 400,
            ..sim_defaults(&stable(), 1.0, 0.05)
        };
        let spec = ConditioningSpec {
            event: Conditioning::MaxJumpExceeds(1.0),
            functional: Functional::One,
            t: 1.0,
        };
        let rep = estimate_conditional(&spec, &stable(), 1.0, &cfg).unwrap();
        assert_eq!(rep.estimate, 1.0);
        assert_eq!(rep.std_error, 0.0);
        assert!(rep.pass && rep.z == Some(0.0));
    }

    #[test]
    fn empty_conditioning_is_an_error() {
        let m = BranchingMechanism::new(0.0, 1.0, LevyMeasure::atoms(vec![(1.0, 1.0)]).unwrap()).unwrap();
        let cfg = SimConfig { n: 20, dt: 1e-2, ..SimConfig::default() };
        let spec = ConditioningSpec {
            event: Conditioning::MaxJumpExceeds(5.0),
            functional: Functional::One,
            t: 1.0,
        };
        match estimate_conditional(&spec, &m, 1.0, &cfg) {
            Err(Error::InsufficientConditioning { events, .. }) => assert_eq!(events, 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn report_grading() {
        let r = McReport::new("x".into(), 1.05, 0.01, 10, 10).with_target(Some(1.0), 0.05);
        assert!(r.pass && !r.within_3se());
        let r = McReport::new("x".into(), 0.2, 0.001, 10, 10).with_bounds(0.1, 0.111, 0.0);
        assert!(!r.pass);
    }
}
